#pragma once

#include <string>
#include <vector>

#include "dcloss/netlist.hpp"
#include "dcloss/solver.hpp"

namespace dcloss {

/// The two sub-circuits behind the loss superposition P = P_V + P_I.
///
/// cv keeps the voltage sources and deletes every current source; ci keeps
/// the topology and zeroes every voltage source (a short realized as a
/// zero-volt source, so element identity and terminal pairs survive).  All
/// three circuits share the identical resistor set under unchanged ids.
struct Decomposition {
    Circuit cv;
    Circuit ci;
    std::vector<std::string> resistors;     // ids common to all three circuits
    std::vector<std::string> dropped_nodes; // isolated in cv and removed, with a warning
};

Decomposition decompose(const Circuit& c);

struct SuperpositionReport {
    double p_total = 0.0;
    double p_v = 0.0;
    double p_i = 0.0;
    double residual = 0.0;   // |p_total - p_v - p_i|
    double cross_term = 0.0; // sum over resistors of R * i_V * i_I
    /// max over resistors of |i_mixed - i_v - i_i|
    double current_identity_residual = 0.0;
};

/// Solves the circuit and both sub-circuits and reports how the losses and
/// per-resistor currents superpose.
SuperpositionReport superposition_check(const Circuit& c);

/// The contraction of the voltage-subcircuit and current-subcircuit branch
/// currents through the resistance diagonal; vanishes for every well-posed
/// circuit (the two current patterns are energy-orthogonal).
double orthogonality_residual(const Circuit& c);

} // namespace dcloss
