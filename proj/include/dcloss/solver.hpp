#pragma once

#include <map>
#include <string>

#include "dcloss/netlist.hpp"

namespace dcloss {

/// Steady-state operating point from the full Kirchhoff system.
struct Solution {
    std::string reference;                    // node pinned to 0 V
    std::map<std::string, double> potentials; // node -> volts
    std::map<std::string, double> currents;   // element -> amps, from->to
    std::map<std::string, double> consumed;   // element -> watts (v * i)
    double total_loss = 0.0;                  // sum of resistor losses
};

/// Solves the augmented nodal system (node potentials plus one current
/// unknown per voltage source) with a dense partial-pivoting LU.  The
/// reference node is the lexicographically smallest node id.  Throws
/// Error{SingularSystem} when the reciprocal condition estimate falls below
/// 1e-12, which on a validated circuit indicates a validation bug.
Solution solve(const Circuit& c);

/// Total I^2 R loss of a solution; identical to Solution::total_loss.
double total_loss(const Solution& s);

double element_voltage(const Solution& s, const Element& e);

/// Power a source pushes into the circuit: value * delivery dual quantity.
double delivered_power(const Solution& s, const Element& e);

/// Current out of a voltage source's `from` terminal (the delivery
/// direction, i.e. minus the from->to element current).
double source_delivery_current(const Solution& s, const Element& e);

/// Voltage rise seen by a current source in its delivery direction:
/// potential(to) - potential(from).
double source_delivery_voltage(const Solution& s, const Element& e);

/// Worst node-current balance violation, normalized by the local current
/// scale at each node.
double kcl_residual(const Circuit& c, const Solution& s);

/// |sum of consumed power over all elements| / sum of magnitudes; zero for a
/// dead circuit.
double energy_residual(const Solution& s);

} // namespace dcloss
