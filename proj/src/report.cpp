#include "identrank/report.hpp"

#include <chrono>

#include "identrank/errors.hpp"
#include "identrank/modelzoo.hpp"

namespace identrank {

namespace {

std::string scale_name(Scale s) { return s == Scale::Log ? "log" : "linear"; }

JsonValue box_json(const ParamBox &box, const std::vector<std::string> &names) {
    JsonValue out = JsonValue::array();
    for (std::size_t i = 0; i < box.size(); ++i) {
        JsonValue b = JsonValue::object();
        b.set("name", names[i]).set("lower", box[i].lower).set("upper", box[i].upper).set("scale", scale_name(box[i].scale));
        out.push(std::move(b));
    }
    return out;
}

JsonValue matrix_columns(const Eigen::MatrixXd &m) {
    JsonValue out = JsonValue::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::vector<double> col(m.col(j).data(), m.col(j).data() + m.rows());
        out.push(JsonValue::numbers(col));
    }
    return out;
}

JsonValue header(const ModelSpec &spec) {
    JsonValue out = JsonValue::object();
    JsonValue artifact = JsonValue::object();
    artifact.set("name", kArtifactName).set("version", kArtifactVersion);
    out.set("artifact", std::move(artifact));
    out.set("spec_file", spec.path.filename().string());
    out.set("spec_hash", "fnv1a64:" + hex64(spec.hash));
    return out;
}

JsonValue model_json(const std::string &name, const std::vector<std::string> &params, const ParamBox &box,
                     bool hazard_form, const std::vector<std::string> &warnings) {
    JsonValue m = JsonValue::object();
    m.set("name", name)
        .set("p", params.size())
        .set("parameters", JsonValue::strings(params))
        .set("hazard_form", hazard_form)
        .set("param_box", box_json(box, params))
        .set("warnings", JsonValue::strings(warnings));
    return m;
}

JsonValue data_json(const std::filesystem::path &path, const Dataset &data) {
    JsonValue d = JsonValue::object();
    d.set("file", path.filename().string())
        .set("n", data.size())
        .set("covariates", data.aux.y.front().size())
        .set("has_trials", !data.aux.trials.empty());
    return d;
}

JsonValue tolerances_json(const Tolerances &tol) {
    JsonValue t = JsonValue::object();
    t.set("tol_rel", tol.tol_rel).set("tol_abs", tol.tol_abs);
    return t;
}

JsonValue analyze_mean_model(const ModelSpec &spec, const MeanModel &model, const std::optional<Dataset> &data,
                             const std::optional<std::filesystem::path> &data_path) {
    if (!data) throw InputError(spec.path.string() + ": model '" + model.name +
                                "' needs a data file (offsets z and covariates y) via \"data\" or --data");
    const ExpFamily fam = spec.make_family();
    if (fam.uses_trials() && data->aux.trials.empty())
        throw InputError(data_path->string() + ": binomial family needs a trials column");
    model.validate_data(data->aux);
    for (std::size_t l = 0; l < data->size(); ++l) {
        try {
            fam.check_observation(data->x[l], data->aux.at(l).trials, l);
        } catch (const InputError &e) {
            throw InputError(data_path->string() + ": " + e.what());
        }
    }
    const Tolerances &tol = spec.tolerances;

    JsonValue out = header(spec);
    out.set("model", model_json(model.name, model.param_names, model.box, model.hazard_form, model.warnings));
    JsonValue family = JsonValue::object();
    family.set("kind", to_string(fam.kind())).set("phi", fam.phi());
    out.set("family", std::move(family));
    out.set("data", data_json(*data_path, *data));
    out.set("tolerances", tolerances_json(tol));

    const Classification cls = classify(model, fam, data->aux, spec.sampler, tol, &*data);
    JsonValue sampler = JsonValue::object();
    sampler.set("M", spec.sampler.count)
        .set("seed", static_cast<std::int64_t>(spec.sampler.seed))
        .set("seed_source", spec.seed_source)
        .set("include_corners", spec.sampler.include_corners)
        .set("pinned", spec.sampler.pinned.size())
        .set("evaluated", cls.records.size());
    out.set("sampler", std::move(sampler));

    JsonValue verdict = JsonValue::object();
    verdict.set("verdict", to_string(cls.kind)).set("full_rank", cls.full_rank).set("deficient", cls.deficient);
    out.set("classification", std::move(verdict));

    const Bounds bounds = bound_report(model, fam, data->aux, spec.sampler, tol);
    JsonValue b = JsonValue::object();
    b.set("hessian_lower", bounds.hessian_lower).set("fisher_upper", bounds.fisher_upper);
    b.set("hazard_hessian_max", bounds.hazard_hessian_max ? JsonValue(*bounds.hazard_hessian_max) : JsonValue());
    b.set("hazard_route_exceeds_fisher", bounds.hazard_route_exceeds_fisher);
    out.set("bounds", std::move(b));

    // Redundancy directions at the first rank-deficient sample.
    JsonValue redundancy = JsonValue::object();
    const SampleRecord *deficient = nullptr;
    for (const auto &rec : cls.records)
        if (rec.rank_D.rank < model.p()) {
            deficient = &rec;
            break;
        }
    if (deficient) {
        redundancy.set("theta", JsonValue::numbers(deficient->sample.theta));
        redundancy.set("directions",
                       matrix_columns(redundancy_directions(model, fam, deficient->sample.theta, data->aux, tol)));
    } else {
        redundancy.set("theta", JsonValue()).set("directions", JsonValue::array());
    }
    out.set("redundancy", std::move(redundancy));

    // Largest identifiable subset from the observed Hessian at fitted data.
    const auto &theta0 = cls.records.front().sample.theta;
    const Dataset fitted = turning_point_data(model, fam, theta0, data->aux);
    JsonValue subset = subset_json(max_rank_subset(observed_hessian(model, fam, theta0, fitted), tol), model.param_names);
    JsonValue max_subset = JsonValue::object();
    max_subset.set("matrix", "observed_hessian_at_fitted_data").set("theta", JsonValue::numbers(theta0));
    for (const auto &[k, v] : subset.as_object()) max_subset.set(k, v);
    out.set("max_subset", std::move(max_subset));

    if (model.hazard_form) {
        const Observation obs = data->aux.at(0);
        const ScalarFunction h = [&model, obs](std::span<const SecondOrder> th) { return model.response(th, obs); };
        JsonValue hs = JsonValue::object();
        hs.set("matrix", "hazard_hessian").set("theta", JsonValue::numbers(theta0)).set("observation", 1);
        const JsonValue sub = subset_json(max_rank_subset(hess(h, theta0), tol), model.param_names);
        for (const auto &[k, v] : sub.as_object()) hs.set(k, v);
        out.set("hazard_hessian_subset", std::move(hs));
    }

    if (model.factorization) {
        const FactorizationCheck fc = factorization_bound_check(model, fam, data->aux, spec.sampler, tol);
        JsonValue f = JsonValue::object();
        f.set("declared", fc.declared).set("passed", fc.passed).set("max_rank_seen", fc.max_rank_seen);
        f.set("witness", fc.witness ? JsonValue::numbers(*fc.witness) : JsonValue());
        out.set("factorization", std::move(f));
    } else {
        out.set("factorization", JsonValue());
    }

    JsonValue samples = JsonValue::array();
    for (const auto &rec : cls.records) {
        JsonValue s = JsonValue::object();
        s.set("source", rec.sample.source).set("theta", JsonValue::numbers(rec.sample.theta));
        s.set("rank_D", to_json(rec.rank_D)).set("rank_I", to_json(rec.rank_I));
        s.set("rank_H", rec.rank_H ? to_json(*rec.rank_H) : JsonValue());
        samples.push(std::move(s));
    }
    out.set("samples", std::move(samples));

    JsonValue notes = JsonValue::array();
    if (cls.kind == ClassificationKind::Redundant)
        notes.push("rank(D) < p at every sampled parameter vector: the model is parameter redundant");
    if (cls.kind == ClassificationKind::EssentiallyFullRankEvidence)
        notes.push("full rank at every sampled parameter vector; sampling cannot prove essential full rank");
    if (bounds.hazard_route_exceeds_fisher)
        notes.push("hazard Hessian rank exceeds the Fisher information rank; hessian_lower uses the observed "
                   "Hessian at turning-point data");
    out.set("notes", std::move(notes));
    return out;
}

JsonValue analyze_custom_model(const ModelSpec &spec, const CustomLikelihoodModel &model,
                               const std::optional<Dataset> &data,
                               const std::optional<std::filesystem::path> &data_path) {
    if (!data) throw InputError(spec.path.string() + ": model '" + model.name + "' needs a data file");
    if (data->size() != model.p())
        throw InputError(data_path->string() + ": " + model.name + " needs exactly one observation per parameter");
    const Tolerances &tol = spec.tolerances;

    JsonValue out = header(spec);
    out.set("model", model_json(model.name, model.param_names, model.box, false, {}));
    out.set("family", JsonValue());
    out.set("data", data_json(*data_path, *data));
    out.set("tolerances", tolerances_json(tol));
    JsonValue sampler = JsonValue::object();
    sampler.set("seed", static_cast<std::int64_t>(spec.sampler.seed)).set("seed_source", spec.seed_source);
    out.set("sampler", std::move(sampler));

    // Evaluated at theta = x, the maximizer.
    const std::vector<double> &theta = data->x;
    const Eigen::MatrixXd h = observed_hessian(model, theta, *data);
    const RankDecision rd = numerical_rank(h, tol);
    JsonValue hessian = JsonValue::object();
    hessian.set("theta", JsonValue::numbers(theta)).set("max_abs_entry", h.cwiseAbs().maxCoeff());
    out.set("hessian", std::move(hessian));
    out.set("rank_H", rd.rank);
    out.set("rank_H_detail", to_json(rd));

    const double radius = 0.5;
    const std::size_t points = 21;
    const bool unique = grid_unique_maximum(model, theta, *data, radius, points);
    JsonValue grid = JsonValue::object();
    grid.set("radius", radius).set("points_per_axis", points).set("unique_maximum", unique);
    out.set("grid", std::move(grid));

    JsonValue subset = subset_json(max_rank_subset(h, tol), model.param_names);
    JsonValue max_subset = JsonValue::object();
    max_subset.set("matrix", "observed_hessian").set("theta", JsonValue::numbers(theta));
    for (const auto &[k, v] : subset.as_object()) max_subset.set(k, v);
    out.set("max_subset", std::move(max_subset));

    JsonValue notes = JsonValue::array();
    notes.push(unique ? "unique maximum verified on grid" : "grid search found another point with L >= L(x)");
    if (rd.rank < model.p())
        notes.push("the Hessian is rank deficient at the maximum although the maximum is isolated");
    out.set("notes", std::move(notes));
    return out;
}

} // namespace

JsonValue to_json(const RankDecision &rd) {
    JsonValue out = JsonValue::object();
    out.set("rank", rd.rank)
        .set("rows", rd.rows)
        .set("cols", rd.cols)
        .set("singular_values", JsonValue::numbers(rd.singular_values))
        .set("tol_rel", rd.tol_rel)
        .set("tol_abs", rd.tol_abs)
        .set("threshold_used", rd.threshold_used)
        .set("gap_ratio", rd.gap_ratio);
    return out;
}

JsonValue subset_json(const SubsetResult &subset, const std::vector<std::string> &names) {
    JsonValue idx = JsonValue::array();
    std::vector<std::string> chosen;
    for (std::size_t i : subset.subset) {
        idx.push(i + 1);
        chosen.push_back(names[i]);
    }
    JsonValue out = JsonValue::object();
    out.set("k", subset.k).set("indices", std::move(idx)).set("parameters", JsonValue::strings(chosen));
    out.set("method", subset.method);
    return out;
}

JsonValue analyze(const ModelSpec &spec, const AnalyzeOptions &options) {
    const auto start = std::chrono::steady_clock::now();
    const BuiltModel model = build_model(spec);
    std::optional<std::filesystem::path> data_path = options.data ? options.data : spec.data;
    std::optional<Dataset> data;
    if (data_path) data = read_data_csv(*data_path);

    JsonValue out = std::holds_alternative<MeanModel>(model)
                        ? analyze_mean_model(spec, std::get<MeanModel>(model), data, data_path)
                        : analyze_custom_model(spec, std::get<CustomLikelihoodModel>(model), data, data_path);
    if (options.timing) {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        out.set("wall_clock_s", elapsed.count());
    }
    return out;
}

JsonValue ridge_point_json(const RidgePoint &pt) {
    JsonValue out = JsonValue::object();
    out.set("t", pt.t)
        .set("drift", pt.drift)
        .set("theta", JsonValue::numbers(pt.theta))
        .set("direction", JsonValue::numbers(pt.direction));
    return out;
}

} // namespace identrank
