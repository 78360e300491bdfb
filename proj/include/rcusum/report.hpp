#pragma once

#include "rcusum/format.hpp"
#include "rcusum/simulation.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace rcusum {

// Header plus one line per row:
// scenario,procedure,d,gamma,b,epsilon_star,arl_mean,arl_se,wdd_mean,wdd_sd,censored_fraction,trials,seed
// censored_fraction refers to the delay runs.
void write_csv(std::ostream& out, const std::vector<RunReport>& rows);

// Aligned table with robust and baseline delays side by side per scenario.
void write_human(std::ostream& out, const std::vector<RunReport>& rows);

// Column-aligned rendering of a header and string cells.
void write_aligned(std::ostream& out, const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& cells);

}  // namespace rcusum
