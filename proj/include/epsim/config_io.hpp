#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "epsim/dynamics.hpp"

namespace epsim {

inline constexpr const char* kCodeVersion = "0.1.0";

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

/// Profile text: "zero" or terms joined by '+': const(m), cos(a,k), sin(a,k), gauss(a,x0,sigma), swirl(a).
Profile parse_profile(const std::string& text, int line = 0);
/// none | quadratic | constant(c) | gaussian(sigma)
Kernel parse_kernel(const std::string& text, int line = 0);
/// none | quadratic | quadratic(center)
Confinement parse_confinement(const std::string& text, int line = 0);

/// Parses key = value sections [domain] [discretization] [physics] [kernels] [run]; '#' and ';'
/// start comments. Missing keys take the SimConfig defaults (panels and order from
/// default_resolution). Throws ConfigError carrying the offending line.
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::filesystem::path& path);

/// Canonical text with every key materialized; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const SimConfig& cfg);

/// FNV-1a 64 of the canonical text.
std::uint64_t config_hash(const SimConfig& cfg);
std::string hash_hex(std::uint64_t h);

}  // namespace epsim
