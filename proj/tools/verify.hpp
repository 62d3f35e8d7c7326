#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace ncstar::cli {

struct Check {
    std::string suite;
    std::string name;
    double value = 0;
    double tol = 0;
    bool pass = false;
    std::string detail;
};

/// Runs one suite ("poly", "grid", "spectral"); `tol` replaces every non-zero tolerance.
std::vector<Check> run_suite(const std::string& suite, const RunConfig& c, std::optional<double> tol);

nlohmann::ordered_json to_json(const Check& k);
std::string summary_line(const Check& k); // "name: pass" or "name: FAIL (value > tol)"

} // namespace ncstar::cli
