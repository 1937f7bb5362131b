#include "slidemil/tuning.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include "slidemil/errors.hpp"
#include "slidemil/hyperparams.hpp"
#include "slidemil/numeric.hpp"
#include "slidemil/parallel.hpp"

namespace slidemil {

TuningSchedule parse_tuning_schedule(const std::string& csv_text, const std::string& origin) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) {
        throw validation_error(origin + ": empty schedule");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string expected = "iteration";
    for (const auto& name : hyperparameter_names()) expected += "," + name;
    if (line != expected) {
        throw validation_error(origin + ": schedule header must be '" + expected + "'");
    }

    TuningSchedule schedule;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ss(line);
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != hyperparameter_names().size() + 1) {
            throw validation_error(origin + ":" + std::to_string(lineno) +
                                   ": wrong number of columns");
        }
        TuningIteration iter;
        iter.index = std::stoi(fields[0]);
        if (iter.index != static_cast<int>(schedule.iterations.size()) + 1) {
            throw validation_error(origin + ":" + std::to_string(lineno) +
                                   ": iterations must be numbered 1..n in order");
        }
        for (std::size_t c = 0; c < hyperparameter_names().size(); ++c) {
            const std::string& mark = fields[c + 1];
            if (mark == "1") {
                iter.active.push_back(hyperparameter_names()[c]);
            } else if (mark != "0") {
                throw validation_error(origin + ":" + std::to_string(lineno) +
                                       ": marks must be 0 or 1, got '" + mark + "'");
            }
        }
        if (iter.active.empty() || iter.active.size() > 6) {
            throw validation_error(origin + ":" + std::to_string(lineno) +
                                   ": an iteration must activate between 1 and 6 hyperparameters");
        }
        schedule.iterations.push_back(std::move(iter));
    }
    if (schedule.iterations.empty()) {
        throw validation_error(origin + ": schedule has no iterations");
    }
    return schedule;
}

TuningSchedule load_tuning_schedule(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open tuning schedule '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_tuning_schedule(buf.str(), path);
}

namespace {

// Cartesian product of the active grids; last name varies fastest.
std::vector<std::map<std::string, std::string>> enumerate_assignments(
    const std::vector<std::string>& active, const HyperGrids& grids) {
    std::vector<std::map<std::string, std::string>> out;
    std::vector<const std::vector<std::string>*> value_lists;
    for (const auto& name : active) {
        const auto it = grids.find(name);
        if (it == grids.end() || it->second.empty()) {
            throw config_error("no candidate grid supplied for hyperparameter '" + name + "'");
        }
        value_lists.push_back(&it->second);
    }
    std::vector<std::size_t> cursor(active.size(), 0);
    for (;;) {
        std::map<std::string, std::string> assignment;
        for (std::size_t i = 0; i < active.size(); ++i) {
            assignment[active[i]] = (*value_lists[i])[cursor[i]];
        }
        out.push_back(std::move(assignment));
        std::size_t pos = active.size();
        while (pos > 0) {
            --pos;
            if (++cursor[pos] < value_lists[pos]->size()) break;
            cursor[pos] = 0;
            if (pos == 0) return out;
        }
        if (active.empty()) return out;
    }
}

}  // namespace

TuningResult run_tuning(const TuningSchedule& schedule, const HyperGrids& grids,
                        const TrainConfig& base_config, const ConfigEvaluator& evaluator,
                        int workers) {
    TuningResult result;
    result.final_config = base_config;

    for (const auto& iter : schedule.iterations) {
        // Active names ordered canonically so enumeration is deterministic.
        std::vector<std::string> active;
        for (const auto& name : hyperparameter_names()) {
            if (std::find(iter.active.begin(), iter.active.end(), name) != iter.active.end()) {
                active.push_back(name);
            }
        }
        const auto assignments = enumerate_assignments(active, grids);

        TuningIterationTrace trace_iter;
        trace_iter.iteration = iter.index;
        trace_iter.evaluations.resize(assignments.size());
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            TuningEvaluation& eval = trace_iter.evaluations[i];
            eval.assignment = assignments[i];
            eval.config = result.final_config;
            for (const auto& [name, value] : assignments[i]) {
                set_hyperparameter(eval.config, name, value);
            }
        }

        parallel_for(assignments.size(), workers, [&](std::size_t i) {
            TuningEvaluation& eval = trace_iter.evaluations[i];
            try {
                eval.mean_val_loss = evaluator(eval.config);
                if (!std::isfinite(eval.mean_val_loss)) {
                    eval.mean_val_loss = std::numeric_limits<double>::infinity();
                }
            } catch (const std::exception&) {
                // A diverging configuration is recorded, not fatal.
                eval.mean_val_loss = std::numeric_limits<double>::infinity();
            }
        });

        std::size_t best = 0;
        for (std::size_t i = 1; i < trace_iter.evaluations.size(); ++i) {
            if (trace_iter.evaluations[i].mean_val_loss <
                trace_iter.evaluations[best].mean_val_loss) {
                best = i;
            }
        }
        trace_iter.evaluations[best].selected = true;
        trace_iter.selected_index = static_cast<int>(best);
        result.final_config = trace_iter.evaluations[best].config;
        result.trace.iterations.push_back(std::move(trace_iter));
    }
    return result;
}

void write_tuning_trace_csv(const TuningTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write tuning trace '" + path + "'");
    }
    out << "iteration,assignment,mean_val_loss,selected\n";
    for (const auto& iter : trace.iterations) {
        for (const auto& eval : iter.evaluations) {
            out << iter.iteration << ',';
            bool first = true;
            for (const auto& [name, value] : eval.assignment) {
                if (!first) out << ';';
                out << name << '=' << value;
                first = false;
            }
            out << ',' << format_double(eval.mean_val_loss) << ',' << (eval.selected ? 1 : 0)
                << '\n';
        }
    }
    if (!out) {
        throw io_error("failed writing tuning trace '" + path + "'");
    }
}

}  // namespace slidemil
