#include <doctest.h>

#include <cmath>
#include <random>

#include "dcloss/decomposition.hpp"
#include "dcloss/netlist.hpp"
#include "dcloss/solver.hpp"
#include "support/random_circuits.hpp"
#include "support/reference_solver.hpp"

using namespace dcloss;
using testsupport::mixed3;
using testsupport::random_circuit;
using testsupport::reference_solve;

TEST_CASE("decompose keeps resistors and element identity") {
    Circuit c = mixed3();
    Decomposition d = decompose(c);

    CHECK(d.cv.elements.size() == 3); // current source dropped
    CHECK(d.cv.find("i1") == nullptr);
    CHECK(d.cv.find("s")->value == 1.0);

    CHECK(d.ci.elements.size() == 4); // topology intact, sources zeroed
    CHECK(d.ci.find("s")->kind == ElementKind::VoltageSource);
    CHECK(d.ci.find("s")->value == 0.0);

    CHECK(d.resistors == std::vector<std::string>{"r1", "r2"});
    CHECK(circuit_class(d.cv) == CircuitClass::VoltageControlled);
    CHECK(d.dropped_nodes.empty());
}

TEST_CASE("voltage-controlled circuits decompose to themselves") {
    Circuit c = parse_netlist("V s 1 0 1\nR r1 1 2 1\nR r2 2 0 1");
    Decomposition d = decompose(c);
    CHECK(d.cv.elements.size() == c.elements.size());
    Solution zero = solve(d.ci);
    CHECK(zero.total_loss == 0.0);
}

TEST_CASE("sub-circuit losses of the mixed fixture are 0.5 + 0.5") {
    Circuit c = mixed3();
    Decomposition d = decompose(c);
    CHECK(reference_solve(d.cv).total_loss == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(reference_solve(d.ci).total_loss == doctest::Approx(0.5).epsilon(1e-12));

    SuperpositionReport r = superposition_check(c);
    CHECK(r.p_total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.p_v == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.p_i == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.residual <= 1e-12);
    CHECK(r.current_identity_residual <= 1e-12);
}

TEST_CASE("current-controlled circuits have all loss on the current side") {
    Circuit c = parse_netlist("I i 0 1 1\nR r1 1 0 1\nR r2 1 0 1");
    SuperpositionReport r = superposition_check(c);
    CHECK(r.p_v == 0.0);
    CHECK(r.p_total == doctest::Approx(r.p_i).epsilon(1e-12));
}

TEST_CASE("a short absorbs the parallel current source entirely") {
    Circuit c = parse_netlist("V s 1 0 1\nR r 1 0 1\nI i 0 1 1");
    SuperpositionReport r = superposition_check(c);
    CHECK(r.p_total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.p_v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.p_i == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("loss superposition and current identity hold on random circuits") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        Circuit c = random_circuit(rng);
        SuperpositionReport r = superposition_check(c);
        CHECK(r.residual <= 1e-9 * std::max(std::abs(r.p_total), 1e-6));
        double scale = 0.0;
        Solution s = solve(c);
        for (const auto& [_, i] : s.currents) scale = std::max(scale, std::abs(i));
        CHECK(r.current_identity_residual <= 1e-12 * std::max(scale, 1.0));
    }
}

TEST_CASE("orthogonality residual") {
    SUBCASE("single-source circuits give exactly zero") {
        Circuit v = parse_netlist("V s 1 0 1\nR r1 1 2 1\nR r2 2 0 1");
        CHECK(orthogonality_residual(v) == 0.0);
        Circuit i = parse_netlist("I i 0 1 1\nR r1 1 0 1\nR r2 1 0 1");
        CHECK(orthogonality_residual(i) == 0.0);
    }
    SUBCASE("mixed fixture within tolerance") {
        CHECK(std::abs(orthogonality_residual(mixed3())) <= 1e-12);
    }
    SUBCASE("random mixed circuits within the scaled bound") {
        std::mt19937_64 rng(303);
        for (int trial = 0; trial < 40; ++trial) {
            Circuit c = random_circuit(rng);
            Decomposition d = decompose(c);
            Solution sv = solve(d.cv);
            Solution si = solve(d.ci);
            double iv = 0.0;
            double ii = 0.0;
            double max_r = 0.0;
            for (const Element& e : c.elements) {
                if (e.kind != ElementKind::Resistor) continue;
                iv += sv.currents.at(e.id) * sv.currents.at(e.id);
                ii += si.currents.at(e.id) * si.currents.at(e.id);
                max_r = std::max(max_r, e.value);
            }
            double bound = std::sqrt(iv) * std::sqrt(ii) * max_r;
            CHECK(std::abs(orthogonality_residual(c)) <= 1e-12 * std::max(bound, 1e-300));
        }
    }
}

TEST_CASE("degenerate sub-circuits are reported, not solved") {
    // Two resistive islands joined only by a current source: opening it
    // disconnects the voltage sub-circuit.  (The full circuit fails
    // validation too; decompose reports the sub-circuit defect directly.)
    Circuit c = make_circuit({{"s", ElementKind::VoltageSource, "1", "0", 1.0},
                              {"r1", ElementKind::Resistor, "1", "0", 1.0},
                              {"link", ElementKind::CurrentSource, "1", "2", 1.0},
                              {"r2", ElementKind::Resistor, "2", "3", 1.0},
                              {"back", ElementKind::CurrentSource, "3", "0", 1.0}});
    CHECK_THROWS_AS(decompose(c), Error);
    try {
        decompose(c);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateSubcircuit);
    }
}

TEST_CASE("nodes isolated by source removal are dropped with a warning") {
    Circuit c = make_circuit({{"s", ElementKind::VoltageSource, "1", "0", 1.0},
                              {"r", ElementKind::Resistor, "1", "0", 1.0},
                              {"in", ElementKind::CurrentSource, "1", "2", 1.0},
                              {"out", ElementKind::CurrentSource, "2", "1", 1.0}});
    Decomposition d = decompose(c);
    CHECK(d.dropped_nodes == std::vector<std::string>{"2"});
    CHECK_FALSE(d.cv.has_node("2"));
    CHECK(d.ci.has_node("2"));
}
