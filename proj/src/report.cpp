#include "mrcmflow/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mrcmflow/errors.hpp"

namespace mrcmflow {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

} // namespace

void write_errors_csv(const std::string& path, const RunRecord& rec) {
    std::ofstream out(path);
    if (!out) throw ConfigError("write_errors_csv: cannot write " + path);
    out << "step,pvi,epsilon,method,flux_err,sat_err,bf_homog_cum,bf_part_cum\n";
    for (const StepRecord& s : rec.steps) {
        out << s.step << ',' << num(s.pvi) << ',' << num(s.epsilon) << ',' << s.rebuilt << ','
            << num(s.flux_err) << ',' << num(s.sat_err) << ',' << s.bf_homog_cum << ','
            << s.bf_part_cum << '\n';
    }
}

void write_events_csv(const std::string& path, const RunRecord& rec) {
    std::ofstream out(path);
    if (!out) throw ConfigError("write_events_csv: cannot write " + path);
    out << "step,pvi,epsilon,ell\n";
    long ell = 0;
    for (long step : rec.update_steps) {
        const StepRecord& s = rec.steps[static_cast<size_t>(step)];
        out << s.step << ',' << num(s.pvi) << ',' << num(s.epsilon) << ',' << ell << '\n';
        ++ell;
    }
}

void write_summary(const std::string& path, const RunRecord& rec, double wall_total_s) {
    std::ofstream out(path);
    if (!out) throw ConfigError("write_summary: cannot write " + path);
    out << "elliptic_solves " << rec.te << "\n";
    out << "bf_updates " << rec.tm_updates << "\n";
    out << "bf_rebuild_events " << rec.tm_total << "\n";
    out << "nhat_per_rebuild " << rec.nhat << "\n";
    out << "subdomains " << rec.n_sub << "\n";
    if (rec.nhat > 0 && rec.te > 0) {
        const CostModel cm{rec.nhat, rec.n_sub, rec.te, rec.tm_total};
        out << "rcr_percent " << num(rcr(cm)) << "\n";
        const CostEstimates ce = cost_estimates(cm, 1.0);
        out << "cost_rebuild_every_step " << num(ce.cost_every_step) << "\n";
        out << "cost_with_reuse " << num(ce.cost_reuse) << "\n";
    }
    out << "breakthrough_step " << rec.breakthrough_step << "\n";
    out << "breakthrough_pvi " << num(rec.breakthrough_pvi) << "\n";
    out << "final_pvi " << num(rec.final_pvi) << "\n";
    out << "solves_homogeneous " << rec.counters.homogeneous << "\n";
    out << "solves_particular " << rec.counters.particular << "\n";
    out << "solves_downscale " << rec.counters.downscale << "\n";
    out << "solves_fine " << rec.counters.fine << "\n";
    out << "interface_solves " << rec.counters.interface_solves << "\n";
    out << "max_div_residual " << num(rec.max_div_residual) << "\n";
    out << "repair_warnings " << rec.repair_warnings << "\n";
    out << "wall_seconds " << num(wall_total_s) << "\n";
}

std::vector<CsvRow> read_errors_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("read_errors_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("read_errors_csv: empty file " + path);
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        CsvRow r{};
        char c;
        if (!(ss >> r.step >> c >> r.pvi >> c >> r.epsilon >> c >> r.method >> c >> r.flux_err >>
              c >> r.sat_err >> c >> r.bf_homog_cum >> c >> r.bf_part_cum))
            throw ConfigError("read_errors_csv: malformed row in " + path + ": " + line);
        rows.push_back(r);
    }
    return rows;
}

} // namespace mrcmflow
