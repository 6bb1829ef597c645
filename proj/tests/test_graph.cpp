#include <doctest.h>

#include <random>
#include <set>

#include "dcloss/graph.hpp"
#include "dcloss/netlist.hpp"
#include "support/random_circuits.hpp"

using namespace dcloss;
using testsupport::random_circuit;

namespace {

// Two supernodes bridged by three resistors, each reached through chains of
// voltage sources; the classic illustration for the fundamental node basis.
Circuit ladder_of_sources() {
    return parse_netlist("V E1 1 5 1\n"
                         "V E2 5 3 1\n"
                         "V E3 1 6 1\n"
                         "V E4 6 4 1\n"
                         "R R1 1 2 1\n"
                         "R R2 3 2 1\n"
                         "R R3 4 2 1\n");
}

} // namespace

TEST_CASE("resistance graph contracts voltage sources") {
    Circuit c = parse_netlist("V s 1 2 1\nR r 1 2 1");
    ResistanceGraph rg = resistance_graph(c);
    CHECK(rg.supernodes.size() == 1);
    REQUIRE(rg.edges.size() == 1);
    CHECK(rg.edges[0].a == rg.edges[0].b); // self-loop
    CHECK(rg.removed_current_sources.empty());
}

TEST_CASE("resistance graph deletes current sources") {
    Circuit c = parse_netlist("I s 1 2 1\nR r 1 2 1");
    ResistanceGraph rg = resistance_graph(c);
    CHECK(rg.supernodes.size() == 2);
    REQUIRE(rg.edges.size() == 1);
    CHECK(rg.edges[0].a != rg.edges[0].b);
    CHECK(rg.removed_current_sources == std::vector<std::string>{"s"});
}

TEST_CASE("four source chains collapse to two supernodes") {
    Circuit c = ladder_of_sources();
    ResistanceGraph rg = resistance_graph(c);
    CHECK(rg.supernodes.size() == 2);

    CycleBasis cb = spanning_tree_and_cycles(rg);
    CHECK(cb.chords.size() == 2); // |E| - |V| + 1 = 3 - 2 + 1

    NodeBasis nb = fundamental_node_basis(c);
    CHECK(nb.dimension() == 2);
    CHECK(nb.representatives == std::vector<std::string>{"1", "2"});
    CHECK(nb.offset.at("3") == doctest::Approx(-2.0)); // -E1 - E2
    CHECK(nb.offset.at("4") == doctest::Approx(-2.0));
    CHECK(nb.offset.at("1") == 0.0);
    CHECK(nb.offset.at("2") == 0.0);

    ResistorClasses classes = classify_resistors(c, nb, cb);
    int v2 = 0;
    for (const auto& [_, cls] : classes.voltage_view) v2 += cls == VoltageClass::V2;
    CHECK(v2 == 3); // L_{1,2} = 3
}

TEST_CASE("triangle has one chord with a three-step cycle") {
    Circuit c = parse_netlist("R a 1 2 1\nR b 2 3 1\nR c 3 1 1\nV s 1 0 1\nR d 0 1 1");
    ResistanceGraph rg = resistance_graph(c);
    CycleBasis cb = spanning_tree_and_cycles(rg);
    std::set<std::string> chords(cb.chords.begin(), cb.chords.end());
    bool triangle_chord = chords.count("a") || chords.count("b") || chords.count("c");
    CHECK(triangle_chord);
    for (const std::string& chord : {"a", "b", "c"}) {
        if (!chords.count(chord)) continue;
        CHECK(cb.cycle_of_chord.at(chord).size() == 3);
    }
}

TEST_CASE("tree-shaped graphs have no chords") {
    Circuit chain = parse_netlist("R a 1 2 1\nR b 2 3 1\nR c 2 4 1\nI s 1 4 1");
    ResistanceGraph rg = resistance_graph(chain);
    CycleBasis cb = spanning_tree_and_cycles(rg);
    CHECK(cb.chords.empty());
    CHECK(cb.tree_edges.size() == 3);
}

TEST_CASE("chord count matches |E| - |V| + components on random circuits") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        Circuit c = random_circuit(rng);
        ResistanceGraph rg = resistance_graph(c);
        CycleBasis cb = spanning_tree_and_cycles(rg);
        int loops = 0;
        for (const auto& e : rg.edges) loops += e.a == e.b;
        int verts = static_cast<int>(rg.supernodes.size());
        int non_loop_edges = static_cast<int>(rg.edges.size()) - loops;
        // Well-posed corpus circuits have a connected resistance graph.
        CHECK(static_cast<int>(cb.chords.size()) == non_loop_edges - verts + 1 + loops);
        CHECK(cb.chords.size() + cb.tree_edges.size() == rg.edges.size());
    }
}

TEST_CASE("resistor classifications") {
    SUBCASE("parallel to a voltage source: V1, self-loop chord") {
        Circuit c = parse_netlist("V s 1 2 1\nR r 1 2 1\nR load 2 3 1\nR back 3 1 1");
        NodeBasis nb = fundamental_node_basis(c);
        CycleBasis cb = spanning_tree_and_cycles(resistance_graph(c));
        ResistorClasses classes = classify_resistors(c, nb, cb);
        CHECK(classes.voltage_view.at("r") == VoltageClass::V1);
        CHECK(classes.voltage_view.at("load") == VoltageClass::V2);
        REQUIRE(std::find(cb.chords.begin(), cb.chords.end(), "r") != cb.chords.end());
        auto cycle = cb.cycle_of_chord.at("r");
        REQUIRE(cycle.size() == 1);
        CHECK(cycle[0].id == "r");
    }
    SUBCASE("leaf resistor is I1") {
        Circuit c = parse_netlist("I i 0 1 1\nR stem 1 0 1\nR leaf 1 2 1\nI pull 0 2 1");
        NodeBasis nb = fundamental_node_basis(c);
        CycleBasis cb = spanning_tree_and_cycles(resistance_graph(c));
        ResistorClasses classes = classify_resistors(c, nb, cb);
        CHECK(classes.current_class("leaf") == CurrentClassKind::I1);
    }
    SUBCASE("parallel triple: shared tree edge is I3, chords are I2") {
        Circuit c = parse_netlist("I i 0 1 1\nR a 0 1 1\nR b 0 1 1\nR c 0 1 1");
        NodeBasis nb = fundamental_node_basis(c);
        CycleBasis cb = spanning_tree_and_cycles(resistance_graph(c));
        ResistorClasses classes = classify_resistors(c, nb, cb);
        int i2 = 0;
        int i3 = 0;
        for (const std::string& id : {"a", "b", "c"}) {
            i2 += classes.current_class(id) == CurrentClassKind::I2;
            i3 += classes.current_class(id) == CurrentClassKind::I3;
        }
        CHECK(i2 == 2);
        CHECK(i3 == 1);
    }
}

TEST_CASE("every resistor gets exactly one class in each view") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        Circuit c = random_circuit(rng);
        NodeBasis nb = fundamental_node_basis(c);
        CycleBasis cb = spanning_tree_and_cycles(resistance_graph(c));
        ResistorClasses classes = classify_resistors(c, nb, cb);
        for (const Element& e : c.elements) {
            if (e.kind != ElementKind::Resistor) continue;
            CHECK(classes.voltage_view.count(e.id) == 1);
            CHECK(classes.owning_cycles.count(e.id) == 1);
            if (nb.supernode_of.at(e.from) == nb.supernode_of.at(e.to)) {
                CHECK(classes.voltage_view.at(e.id) == VoltageClass::V1);
            }
        }
    }
}

TEST_CASE("basis dimension and cycle count are choice independent") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        Circuit c = random_circuit(rng);
        int d0 = fundamental_node_basis(c).dimension();
        ResistanceGraph rg = resistance_graph(c);
        size_t n0 = spanning_tree_and_cycles(rg).chords.size();
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            BasisOptions bo;
            bo.representative_seed = seed * 1000 + trial;
            CHECK(fundamental_node_basis(c, bo).dimension() == d0);
            TreeOptions to;
            to.shuffle_seed = seed * 77 + trial;
            CHECK(spanning_tree_and_cycles(rg, to).chords.size() == n0);
        }
    }
}

TEST_CASE("removal classification: parallel versus bridge") {
    Circuit parallel_pair = parse_netlist("V s 1 0 1\nR r1 1 0 1\nR r2 1 0 1");
    CHECK(classify_removal(parallel_pair, "r2") == EditClass::Parallel);

    Circuit chain = parse_netlist("V s 1 0 1\nR r1 1 2 1\nR r2 2 0 1");
    CHECK(classify_removal(chain, "r2") == EditClass::Serial);
    CHECK(is_bridge(chain, "r1"));

    Circuit fig2 = parse_netlist("V s 1 0 1\nR r1 1 0 1\nR r2 1 0 1");
    CHECK(classify_removal(fig2, "r2") == EditClass::Parallel);
}
