#include "identrank/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "identrank/errors.hpp"
#include "identrank/report.hpp"

namespace identrank::cli {

namespace {

std::vector<double> parse_theta(const std::string &text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used == 0 || cell.find_first_not_of(" \t", used) != std::string::npos || !std::isfinite(v))
            throw InputError("--theta: '" + cell + "' is not a finite number");
        out.push_back(v);
    }
    if (out.empty()) throw InputError("--theta needs a comma-separated parameter vector");
    return out;
}

void apply_env_seed(ModelSpec &spec) {
    const char *env = std::getenv("IDENTRANK_SEED");
    if (!env || !*env) return;
    const std::string text(env);
    if (text.find_first_not_of("0123456789") != std::string::npos)
        throw InputError("IDENTRANK_SEED must be a non-negative integer, got '" + text + "'");
    try {
        spec.sampler.seed = std::stoull(text);
    } catch (const std::exception &) {
        throw InputError("IDENTRANK_SEED is out of range: '" + text + "'");
    }
    spec.seed_source = "env";
}

std::string render(const JsonValue &v, const std::string &format) {
    return format == "text" ? v.dump_text() : v.dump();
}

void write_output(const std::string &text, const std::string &path, std::ostream &out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw InputError(path + ": cannot open for writing");
    file << text;
    if (!file) throw InputError(path + ": write failed");
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Parameter redundancy and identifiability analysis for exponential-family models"};
    app.require_subcommand(1);
    std::string format = "json";
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "text"}));

    std::string spec_path, data_path, out_path;
    bool timing = false;
    auto *analyze_cmd = app.add_subcommand("analyze", "Classify a model and write an identifiability report");
    analyze_cmd->add_option("--spec", spec_path, "Model spec (JSON)")->required();
    analyze_cmd->add_option("--data", data_path, "Data CSV; overrides the spec's data file");
    analyze_cmd->add_option("--out", out_path, "Report path (default: stdout)");
    analyze_cmd->add_flag("--timing", timing, "Record wall-clock time in the report");

    std::string matrix_path;
    Tolerances tol;
    auto *rank_cmd = app.add_subcommand("rank", "Numerical rank of a CSV matrix");
    rank_cmd->add_option("--matrix", matrix_path, "Matrix CSV")->required();
    rank_cmd->add_option("--tol-rel", tol.tol_rel, "Relative tolerance")->check(CLI::PositiveNumber);
    rank_cmd->add_option("--tol-abs", tol.tol_abs, "Absolute tolerance")->check(CLI::PositiveNumber);

    std::string theta_text;
    double t_max = 0.0;
    std::size_t steps = 0;
    auto *ridge_cmd = app.add_subcommand("ridge", "Trace the likelihood ridge through a redundant point");
    ridge_cmd->add_option("--spec", spec_path, "Model spec (JSON)")->required();
    ridge_cmd->add_option("--theta", theta_text, "Start point, comma separated")->required();
    ridge_cmd->add_option("--tmax", t_max, "Arc length in each direction")->required();
    ridge_cmd->add_option("--steps", steps, "Steps in each direction")->required();

    for (auto *sub : {analyze_cmd, rank_cmd, ridge_cmd}) sub->fallthrough();

    std::vector<std::string> rest(args.rbegin(), args.rend());
    if (!rest.empty()) rest.pop_back(); // program name
    try {
        app.parse(rest);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    }

    try {
        if (analyze_cmd->parsed()) {
            ModelSpec spec = load_spec(spec_path);
            apply_env_seed(spec);
            AnalyzeOptions options;
            if (!data_path.empty()) options.data = data_path;
            options.timing = timing;
            write_output(render(analyze(spec, options), format), out_path, out);
        } else if (rank_cmd->parsed()) {
            const RankDecision rd = numerical_rank(read_matrix_csv(matrix_path), tol);
            out << render(to_json(rd), format);
        } else if (ridge_cmd->parsed()) {
            ModelSpec spec = load_spec(spec_path);
            const BuiltModel built = build_model(spec);
            if (!std::holds_alternative<MeanModel>(built))
                throw InputError(spec.model_name + " is not a mean model; ridges are traced through redundant mean structures");
            const MeanModel &model = std::get<MeanModel>(built);
            if (!spec.data) throw InputError(spec_path + ": ridge needs the spec's data file for offsets and covariates");
            const Dataset data = read_data_csv(*spec.data);
            const std::vector<double> theta = parse_theta(theta_text);
            if (theta.size() != model.p())
                throw InputError("--theta has " + std::to_string(theta.size()) + " values, model has p = " +
                                 std::to_string(model.p()));
            const RidgeTrace trace = ridge_trace(model, spec.make_family(), theta, data, t_max, steps, spec.tolerances);
            for (const auto &pt : trace.points) {
                if (format == "text") {
                    out << "t=" << format_double(pt.t) << " drift=" << format_double(pt.drift)
                        << " theta=" << JsonValue::numbers(pt.theta).dump_compact()
                        << " direction=" << JsonValue::numbers(pt.direction).dump_compact() << "\n";
                } else {
                    out << ridge_point_json(pt).dump_compact() << "\n";
                }
            }
            JsonValue summary = JsonValue::object();
            summary.set("max_drift", trace.max_drift)
                .set("log_likelihood0", trace.log_likelihood0)
                .set("truncated", trace.truncated)
                .set("points", trace.points.size());
            out << summary.dump_compact() << "\n";
        }
    } catch (const InputError &e) {
        err << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const NumericalError &e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception &e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

} // namespace identrank::cli
