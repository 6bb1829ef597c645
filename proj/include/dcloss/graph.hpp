#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dcloss/netlist.hpp"

namespace dcloss {

/// The circuit with every voltage source contracted (its endpoints merged
/// into one supernode) and every current source deleted.  Resistors keep
/// their identity and may become self-loops.
struct ResistanceGraph {
    /// Partition of the original nodes; group k is sorted and the groups are
    /// ordered by their smallest member.
    std::vector<std::vector<std::string>> supernodes;
    std::map<std::string, int> supernode_of;

    struct Edge {
        std::string id; // resistor id
        int a = 0;      // supernode of the resistor's `from` node
        int b = 0;      // supernode of the resistor's `to` node
    };
    std::vector<Edge> edges; // file order
    std::vector<std::string> removed_current_sources;

    const Edge* edge(const std::string& id) const;
};

ResistanceGraph resistance_graph(const Circuit& c);

struct TreeOptions {
    /// When set, the DFS visits edges in a seeded random order instead of
    /// file order and starts from a random supernode.  Used to check that
    /// derived quantities are basis independent.
    std::optional<std::uint64_t> shuffle_seed;
};

/// One fundamental cycle per chord: the chord itself followed by the tree
/// path back from the chord's `b` supernode to its `a` supernode.
/// `direction` is +1 when the cycle traverses the resistor from->to.
struct CycleStep {
    std::string id;
    int direction = 1;
};

struct CycleBasis {
    std::vector<std::string> tree_edges; // resistor ids, file order
    std::vector<std::string> chords;     // resistor ids, file order
    std::map<std::string, std::vector<CycleStep>> cycle_of_chord;
};

/// Depth-first spanning tree (rooted at the first supernode, edges visited
/// in file order unless shuffled) and the fundamental cycles of its chords.
/// Self-loop edges are always chords whose cycle is the loop itself.
CycleBasis spanning_tree_and_cycles(const ResistanceGraph& rg, const TreeOptions& options = {});

struct BasisOptions {
    /// When set, representatives are picked at random inside each supernode
    /// instead of taking the smallest node id.
    std::optional<std::uint64_t> representative_seed;
};

/// One representative node per supernode plus, for every node, the algebraic
/// sum of voltage-source values along the pure voltage-source path from its
/// representative: potential(node) = potential(representative) + offset(node).
struct NodeBasis {
    std::vector<std::string> representatives; // index-aligned with supernodes
    std::map<std::string, int> supernode_of;
    std::map<std::string, double> offset;

    int dimension() const { return static_cast<int>(representatives.size()); }
};

/// Requires a circuit free of pure voltage-source cycles (offsets would be
/// ambiguous otherwise; validate() rejects such circuits).
NodeBasis fundamental_node_basis(const Circuit& c, const BasisOptions& options = {});

enum class VoltageClass { V1, V2 };
enum class CurrentClassKind { I1, I2, I3 };

struct ResistorClasses {
    std::map<std::string, VoltageClass> voltage_view;
    /// Chords whose fundamental cycle contains the resistor; empty for I1,
    /// one entry for I2, several for I3.
    std::map<std::string, std::vector<std::string>> owning_cycles;

    CurrentClassKind current_class(const std::string& id) const;
};

ResistorClasses classify_resistors(const Circuit& c, const NodeBasis& nb, const CycleBasis& cb);

enum class EditClass { Parallel, Serial };

const char* edit_class_name(EditClass k);

/// True when no path joins the element's endpoints once it is removed.
bool is_bridge(const Circuit& c, const std::string& element_id);

/// Removal of a non-bridge element deletes it (parallel removal: one cycle
/// disappears); removal of a bridge contracts it (serial removal: the
/// endpoints merge).  Attachments are classified by their own structure:
/// adding between existing nodes is parallel, subdividing an element is
/// serial.
EditClass classify_removal(const Circuit& c, const std::string& element_id);

} // namespace dcloss
