#pragma once

#include <string>
#include <vector>

#include "mrcmflow/simulation.hpp"

namespace mrcmflow {

/// Writes errors.csv: one row per elliptic step with the fixed column set
/// step,pvi,epsilon,method,flux_err,sat_err,bf_homog_cum,bf_part_cum.
void write_errors_csv(const std::string& path, const RunRecord& rec);

/// Writes events.csv: one row per basis rebuild (step,pvi,epsilon,ell).
void write_events_csv(const std::string& path, const RunRecord& rec);

/// Writes summary.txt: RCR, breakthrough, counters, timings.
void write_summary(const std::string& path, const RunRecord& rec, double wall_total_s);

struct CsvRow {
    long step;
    double pvi, epsilon;
    int method;
    double flux_err, sat_err;
    long bf_homog_cum, bf_part_cum;
};

/// Reads back an errors.csv (for the compare subcommand).
std::vector<CsvRow> read_errors_csv(const std::string& path);

} // namespace mrcmflow
