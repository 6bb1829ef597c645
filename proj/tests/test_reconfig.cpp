#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "dcloss/decomposition.hpp"
#include "dcloss/reconfig.hpp"
#include "dcloss/solver.hpp"
#include "support/random_circuits.hpp"

using namespace dcloss;
using testsupport::mixed3;
using testsupport::random_circuit;

namespace {

Circuit load_fixture(const std::string& name) {
    std::ifstream in(std::string(DCLOSS_FIXTURE_DIR) + "/" + name);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_netlist(buf.str());
}

TopologyEdit remove_edit(const std::string& id) {
    return {TopologyEdit::Action::Remove, id, std::nullopt, std::nullopt};
}

TopologyEdit contract_edit(const std::string& id) {
    return {TopologyEdit::Action::Remove, id, std::nullopt, EditClass::Serial};
}

TopologyEdit add_edit(Element e) {
    return {TopologyEdit::Action::Add, "", std::move(e), std::nullopt};
}

TopologyEdit subdivide_edit(const std::string& target, Element e) {
    return {TopologyEdit::Action::Subdivide, target, std::move(e), std::nullopt};
}

} // namespace

TEST_CASE("edit specs round-trip through the mini-grammar") {
    for (const std::string& spec :
         {"remove r2", "add R rx 1 2 0.5", "add I ix 0 3 2", "subdivide r1 with V vb 0.25"}) {
        CHECK(format_edit(parse_edit(spec)) == spec);
    }
    CHECK_THROWS_AS(parse_edit("remove"), Error);
    CHECK_THROWS_AS(parse_edit("add R rx 1 2"), Error);
    CHECK_THROWS_AS(parse_edit("subdivide r1 by V vb 1"), Error);
    CHECK_THROWS_AS(parse_edit("add Q qx 1 2 1"), Error);
}

TEST_CASE("apply_edit realizes the four edit shapes") {
    Circuit c = parse_netlist("V s 1 0 1\nR r1 1 2 1\nR r2 2 0 1\nR shunt 1 0 1");
    SUBCASE("parallel removal deletes") {
        Circuit out = apply_edit(c, remove_edit("shunt"));
        CHECK(out.find("shunt") == nullptr);
        CHECK(out.nodes.size() == 3);
    }
    SUBCASE("serial removal contracts through a zero-volt source") {
        Circuit out = apply_edit(c, contract_edit("r1"));
        const Element* stub = out.find("r1");
        REQUIRE(stub != nullptr);
        CHECK(stub->kind == ElementKind::VoltageSource);
        CHECK(stub->value == 0.0);
    }
    SUBCASE("bridges contract by default") {
        Circuit bridged = parse_netlist("V s 1 0 1\nR a 1 0 1\nR b 1 2 1\nR c 2 3 1\nR d 3 2 1\n"
                                        "I i 3 2 0.5");
        CHECK(classify_edit(bridged, remove_edit("b")) == EditClass::Serial);
        Circuit out = apply_edit(bridged, remove_edit("b"));
        CHECK(out.find("b")->kind == ElementKind::VoltageSource);
    }
    SUBCASE("additions need existing endpoints and fresh ids") {
        Circuit out = apply_edit(c, add_edit({"rx", ElementKind::Resistor, "1", "2", 2.0}));
        CHECK(out.find("rx") != nullptr);
        CHECK_THROWS_AS(apply_edit(c, add_edit({"rx", ElementKind::Resistor, "1", "9", 2.0})),
                        Error);
        CHECK_THROWS_AS(apply_edit(c, add_edit({"r1", ElementKind::Resistor, "1", "2", 2.0})),
                        Error);
    }
    SUBCASE("subdivision rewires the target through a fresh node") {
        Circuit out = apply_edit(c, subdivide_edit("r1", {"vb", ElementKind::VoltageSource, "", "",
                                                          0.5}));
        const Element* half = out.find("r1");
        const Element* inserted = out.find("vb");
        REQUIRE(inserted != nullptr);
        CHECK(half->from == "1");
        CHECK(half->to == inserted->from);
        CHECK(inserted->to == "2");
        CHECK(out.nodes.size() == 4);
        CHECK(classify_edit(c, subdivide_edit("r1", *inserted)) == EditClass::Serial);
    }
}

TEST_CASE("delta oracle on the three trivial fixtures") {
    Circuit v_par = parse_netlist("V s 1 0 1\nR r1 1 0 1\nR r2 1 0 1");
    CHECK(delta_oracle(v_par, remove_edit("r2")) == doctest::Approx(-1.0).epsilon(1e-12));

    Circuit i_par = parse_netlist("I i 0 1 1\nR r1 1 0 1\nR r2 1 0 1");
    CHECK(delta_oracle(i_par, remove_edit("r2")) == doctest::Approx(0.5).epsilon(1e-12));

    Circuit v_ser = parse_netlist("V s 1 0 1\nR r1 1 2 1\nR r2 2 0 1");
    CHECK(delta_oracle(v_ser, contract_edit("r2")) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("predicted deltas carry the frozen corollary signs") {
    SUBCASE("parallel removal, voltage controlled") {
        Circuit c = parse_netlist("V s 1 0 1\nR r1 1 0 1\nR r2 1 0 1");
        DeltaLossReport rep = predict_delta(c, remove_edit("r2"));
        CHECK(rep.classified == EditClass::Parallel);
        CHECK(rep.dp_v == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(rep.dp_i == 0.0);
        CHECK(rep.agreement <= 1e-12);
        CHECK(std::abs(*rep.i_before.cv) == doctest::Approx(1.0));
        CHECK(std::abs(*rep.v_after.cv) == doctest::Approx(1.0));
    }
    SUBCASE("parallel removal, current controlled") {
        Circuit c = parse_netlist("I i 0 1 1\nR r1 1 0 1\nR r2 1 0 1");
        DeltaLossReport rep = predict_delta(c, remove_edit("r2"));
        CHECK(rep.dp_i == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(rep.dp_v == 0.0);
        CHECK(std::abs(*rep.i_before.ci) == doctest::Approx(0.5));
        CHECK(std::abs(*rep.v_after.ci) == doctest::Approx(1.0));
    }
    SUBCASE("serial removal, voltage controlled") {
        Circuit c = parse_netlist("V s 1 0 1\nR r1 1 2 1\nR r2 2 0 1");
        DeltaLossReport rep = predict_delta(c, contract_edit("r2"));
        CHECK(rep.classified == EditClass::Serial);
        CHECK(rep.dp_v == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(rep.agreement <= 1e-12);
    }
    SUBCASE("serial removal, current controlled") {
        Circuit c = parse_netlist("I i 1 2 1\nR r1 2 3 1\nR r2 3 1 1");
        DeltaLossReport rep = predict_delta(c, contract_edit("r2"));
        CHECK(rep.classified == EditClass::Serial);
        CHECK(rep.dp_i == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(rep.agreement <= 1e-12);
    }
}

TEST_CASE("every edit on the mixed fixture matches the oracle") {
    Circuit c = mixed3();
    std::vector<TopologyEdit> edits = {
        remove_edit("r1"),
        remove_edit("r2"),
        contract_edit("r1"),
        remove_edit("i1"),
        add_edit({"rx", ElementKind::Resistor, "1", "2", 1.0}),
        add_edit({"ix", ElementKind::CurrentSource, "1", "0", 0.5}),
        subdivide_edit("r1", {"rr", ElementKind::Resistor, "", "", 2.0}),
        subdivide_edit("r2", {"vv", ElementKind::VoltageSource, "", "", 0.5}),
    };
    for (const TopologyEdit& e : edits) {
        DeltaLossReport rep = predict_delta(c, e);
        CHECK(rep.agreement <= 1e-9 * std::max(1.0, std::abs(rep.dp_oracle)));
        CHECK(rep.dp_predicted == doctest::Approx(rep.dp_v + rep.dp_i).epsilon(1e-12));
    }
}

TEST_CASE("source-edit purity: dp_v or dp_i vanishes identically") {
    Circuit c = mixed3();
    DeltaLossReport i_removal = predict_delta(c, remove_edit("i1"));
    CHECK(i_removal.dp_v == 0.0);

    Circuit chain = parse_netlist("V s 1 0 1\nR r1 1 2 1\nR r2 2 0 1\nI i 0 2 0.5");
    DeltaLossReport v_removal = predict_delta(chain, contract_edit("s"));
    CHECK(v_removal.classified == EditClass::Serial);
    CHECK(v_removal.dp_i == 0.0);
    CHECK(v_removal.agreement <= 1e-12);
}

TEST_CASE("attachment and removal are antisymmetric") {
    std::mt19937_64 rng(515);
    int checked = 0;
    for (int trial = 0; trial < 20 && checked < 12; ++trial) {
        Circuit c = random_circuit(rng);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(c.nodes.size()) - 1);
        std::string m = c.nodes[pick(rng)];
        std::string n = c.nodes[pick(rng)];
        if (m == n) continue;
        Element rx{"rx", ElementKind::Resistor, m, n, testsupport::log_uniform(rng)};
        double dp_add = predict_delta(c, add_edit(rx)).dp_predicted;
        Circuit with = apply_edit(c, add_edit(rx));
        double dp_remove = predict_delta(with, remove_edit("rx")).dp_predicted;
        CHECK(dp_add == doctest::Approx(-dp_remove).epsilon(1e-9).scale(
                            std::max(1.0, std::abs(dp_add))));
        ++checked;
    }
    CHECK(checked >= 12);
}

TEST_CASE("uncovered edits raise UnsupportedEdit") {
    Circuit c = parse_netlist("V s 1 0 1\nR r1 1 0 1\nR r2 1 0 1\nI i 0 1 0.5");
    try {
        predict_delta(c, remove_edit("s")); // non-bridge voltage source
        FAIL("expected UnsupportedEdit");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedEdit);
    }
    try {
        predict_delta(c, subdivide_edit("r1", {"ii", ElementKind::CurrentSource, "", "", 1.0}));
        FAIL("expected UnsupportedEdit");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedEdit);
    }
}

TEST_CASE("removals that strand a current source are ill-posed") {
    Circuit c = parse_netlist("V s 1 0 1\nR r1 1 0 1\nR r2 1 2 1\nI i 2 0 1");
    try {
        delta_oracle(c, remove_edit("r2"));
        FAIL("expected EditIllPosed");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EditIllPosed);
    }
}

TEST_CASE("equivalent-circuit predictor equals the corollary predictor") {
    Circuit c = mixed3();
    TopologyEdit attach = add_edit({"rx", ElementKind::Resistor, "1", "2", 1.0});
    double via_eq = predict_delta_via_equivalent(c, attach);
    DeltaLossReport full = predict_delta(c, attach);
    CHECK(via_eq == doctest::Approx(full.dp_predicted).scale(1.0).epsilon(1e-12));
    CHECK(via_eq == doctest::Approx(full.dp_oracle).scale(1.0).epsilon(1e-12));

    // single-source circuits reduce to the plain Thevenin/Norton prediction
    Circuit v = parse_netlist("V s 1 0 1\nR r1 1 2 1\nR r2 2 0 1");
    TopologyEdit shunt = add_edit({"rx", ElementKind::Resistor, "2", "0", 1.0});
    CHECK(predict_delta_via_equivalent(v, shunt) ==
          doctest::Approx(predict_delta(v, shunt).dp_predicted).epsilon(1e-12));
}

TEST_CASE("equivalent predictor over random circuits, pairs and values") {
    std::mt19937_64 rng(616);
    int checked = 0;
    for (int trial = 0; trial < 40 && checked < 20; ++trial) {
        Circuit c = random_circuit(rng);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(c.nodes.size()) - 1);
        std::string m = c.nodes[pick(rng)];
        std::string n = c.nodes[pick(rng)];
        if (m == n) continue;
        for (double r : {0.1, 1.0, 10.0}) {
            TopologyEdit attach = add_edit({"rx", ElementKind::Resistor, m, n, r});
            double via_eq = predict_delta_via_equivalent(c, attach);
            DeltaLossReport full = predict_delta(c, attach);
            double scale = std::max({std::abs(full.dp_predicted), std::abs(via_eq), 1e-9});
            CHECK(std::abs(via_eq - full.dp_predicted) <= 1e-9 * scale);
        }
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("rank_switchings orders by predicted delta, matching the oracle") {
    CHECK(rank_switchings(mixed3(), {}).ranked.empty());

    Circuit c = parse_netlist("V s 1 0 1\nR heavy 1 0 0.5\nR light 1 0 4\nR bridge 1 2 1\nI i 2 0 1");
    std::vector<TopologyEdit> candidates = {
        remove_edit("heavy"),
        remove_edit("light"),
        add_edit({"rx", ElementKind::Resistor, "1", "0", 1.0}),
        remove_edit("bridge"), // strands the current source: excluded
    };
    Ranking ranking = rank_switchings(c, candidates);
    REQUIRE(ranking.ranked.size() == 3);
    REQUIRE(ranking.excluded.size() == 1);
    CHECK(ranking.excluded[0].code == ErrorCode::EditIllPosed);
    for (size_t i = 1; i < ranking.ranked.size(); ++i) {
        CHECK(ranking.ranked[i - 1].report.dp_predicted <= ranking.ranked[i].report.dp_predicted);
        CHECK(ranking.ranked[i - 1].report.dp_oracle <= ranking.ranked[i].report.dp_oracle);
    }
    // heavy carries the most current, so its removal recovers the most loss
    CHECK(ranking.ranked[0].edit.target == "heavy");
}

TEST_CASE("polarity: attaching a resistor never grows the terminal voltage") {
    Circuit ideal = parse_netlist("V s 1 0 1\nR r 1 0 1");
    PolarityCheck at_source = polarity_check(ideal, "1", "0", 1.0);
    CHECK(at_source.v_before == doctest::Approx(1.0));
    CHECK(at_source.v_after == doctest::Approx(1.0)); // pinned by the source
    CHECK(at_source.holds);

    Circuit shunt = parse_netlist("I i 0 1 1\nR r 1 0 1");
    PolarityCheck halved = polarity_check(shunt, "1", "0", 1.0);
    CHECK(halved.v_before == doctest::Approx(1.0));
    CHECK(halved.v_after == doctest::Approx(0.5));
    CHECK(halved.holds);

    std::mt19937_64 rng(717);
    int checked = 0;
    for (int trial = 0; trial < 40 && checked < 25; ++trial) {
        Circuit c = random_circuit(rng);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(c.nodes.size()) - 1);
        std::string m = c.nodes[pick(rng)];
        std::string n = c.nodes[pick(rng)];
        if (m == n) continue;
        PolarityCheck pc = polarity_check(c, m, n, testsupport::log_uniform(rng));
        CHECK(pc.holds);
        ++checked;
    }
    CHECK(checked >= 25);
}

TEST_CASE("paradox fixture: removing a delivering source raises the loss") {
    Circuit c = load_fixture("fig5_paradox.net");
    REQUIRE(validate(c).well_posed);

    Solution mixed = solve(c);
    const Element* i2 = c.find("i2");
    REQUIRE(i2 != nullptr);
    CHECK(delivered_power(mixed, *i2) > 0.0); // the source is active

    double dp = delta_oracle(c, remove_edit("i2"));
    CHECK(dp == doctest::Approx(0.03125).epsilon(1e-12)); // loss increases by 1/32 W

    DeltaLossReport rep = predict_delta(c, remove_edit("i2"));
    CHECK(rep.dp_predicted == doctest::Approx(0.03125).epsilon(1e-12));
    CHECK(rep.dp_v == 0.0);

    // Current sub-circuit terminal voltages: 0 V before, 0.125 V after.
    CHECK(std::abs(*rep.v_before.ci) <= 1e-12);
    CHECK(std::abs(*rep.v_after.ci) == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(0.25 * (std::abs(*rep.v_before.ci) + std::abs(*rep.v_after.ci)) ==
          doctest::Approx(0.03125).epsilon(1e-12));
}
