#pragma once

// Ready-made sources and coefficient fields used by the CLI and the tests.

#include <array>
#include <string>

#include "hyperinv/evolve.hpp"
#include "hyperinv/galerkin.hpp"

namespace hyperinv {

enum class TimeProfile { kSin2, kRamp, kConstant };

TimeProfile parse_time_profile(const std::string& name);
double time_profile(TimeProfile profile, double t, double T);

/// Gaussian load exp(-|x - c|^2 / (2 w^2)) times a time profile.  For the
/// elastic problem `direction` weights the two displacement components.
SourceTerm pulse_source(const Discretization& disc, const TimeGrid& grid,
                        std::array<double, 2> center, double width, double amplitude,
                        TimeProfile profile, std::array<double, 2> direction = {1.0, 0.0});

/// base + amplitude * exp(-|x - c|^2 / (2 w^2)) at every time node.
ParameterField bump_field(const Discretization& disc, const TimeGrid& grid, double base,
                          double amplitude, std::array<double, 2> center, double width);

/// Two layers split at x = interface with a tanh transition of the given width.
ParameterField layered_field(const Discretization& disc, const TimeGrid& grid, double top,
                             double bottom, double interface, double transition);

}  // namespace hyperinv
