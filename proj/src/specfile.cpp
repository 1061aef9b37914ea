#include "identrank/specfile.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "identrank/errors.hpp"
#include "identrank/modelzoo.hpp"

namespace identrank {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path.string() + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[noreturn]] void fail(const std::filesystem::path &file, const std::string &msg) {
    throw InputError(file.string() + ": " + msg);
}

void only_keys(const std::filesystem::path &file, const json &obj, const std::string &where,
               std::initializer_list<const char *> allowed) {
    if (!obj.is_object()) fail(file, where + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto &[k, v] : obj.items())
        if (!ok.count(k)) fail(file, "unknown key '" + k + "' in " + where);
}

double number(const std::filesystem::path &file, const json &v, const std::string &what) {
    if (!v.is_number()) fail(file, what + " must be a number");
    return v.get<double>();
}

std::size_t count(const std::filesystem::path &file, const json &v, const std::string &what) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(file, what + " must be a non-negative integer");
    return v.get<std::size_t>();
}

Scale parse_scale(const std::filesystem::path &file, const json &v) {
    if (v == "log") return Scale::Log;
    if (v == "linear") return Scale::Linear;
    fail(file, "scale must be \"log\" or \"linear\"");
}

std::filesystem::path resolve(const std::filesystem::path &spec, const json &v, const std::string &what) {
    if (!v.is_string()) fail(spec, what + " must be a path string");
    std::filesystem::path p = v.get<std::string>();
    if (p.is_relative()) p = spec.parent_path() / p;
    if (!std::filesystem::exists(p)) fail(spec, what + " '" + p.string() + "' does not exist");
    return p;
}

std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_real(const std::filesystem::path &file, std::size_t line, const std::string &cell) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (cell.empty() || used != cell.size() || !std::isfinite(v)) {
        std::ostringstream os;
        os << file.string() << ":" << line << ": '" << cell << "' is not a finite number";
        throw InputError(os.str());
    }
    return v;
}

// Lines with CR stripped and line numbers, skipping blank and '#' lines.
std::vector<std::pair<std::size_t, std::string>> content_lines(const std::string &text) {
    std::vector<std::pair<std::size_t, std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#')
            continue;
        out.emplace_back(no, line);
    }
    return out;
}

} // namespace

std::uint64_t fnv1a64(const std::string &bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

ExpFamily ModelSpec::make_family() const {
    switch (family) {
    case FamilyKind::Poisson: return ExpFamily::poisson();
    case FamilyKind::Binomial: return ExpFamily::binomial();
    case FamilyKind::Normal: return ExpFamily::normal(phi);
    }
    return ExpFamily::poisson();
}

ModelSpec load_spec(const std::filesystem::path &path) {
    const std::string text = read_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        fail(path, std::string("invalid JSON: ") + e.what());
    }
    only_keys(path, doc, "spec",
              {"model", "family", "data", "param_box", "pinned_theta", "sampler", "tolerances",
               "declared_factorization"});

    ModelSpec spec;
    spec.path = path;
    spec.hash = fnv1a64(text);

    if (!doc.contains("model")) fail(path, "missing \"model\"");
    const json &model = doc["model"];
    only_keys(path, model, "model", {"name", "stages", "p", "design"});
    if (!model.contains("name") || !model["name"].is_string()) fail(path, "model.name must be a string");
    spec.model_name = model["name"].get<std::string>();
    if (spec.model_name == "armitage_doll") {
        spec.stages = model.contains("stages") ? count(path, model["stages"], "model.stages") : 4;
    } else if (spec.model_name == "quartic") {
        spec.p = model.contains("p") ? count(path, model["p"], "model.p") : 3;
    } else if (spec.model_name == "poisson_glm" || spec.model_name == "linear_gaussian") {
        if (!model.contains("design")) fail(path, spec.model_name + " needs model.design (a CSV path)");
        spec.design = resolve(path, model["design"], "model.design");
    } else if (spec.model_name != "two_mutation" && spec.model_name != "cond_demo") {
        fail(path, "unknown model '" + spec.model_name +
                       "' (expected armitage_doll, two_mutation, poisson_glm, linear_gaussian, cond_demo or quartic)");
    }

    if (doc.contains("family")) {
        const json &fam = doc["family"];
        only_keys(path, fam, "family", {"kind", "phi"});
        if (!fam.contains("kind") || !fam["kind"].is_string()) fail(path, "family.kind must be a string");
        try {
            spec.family = family_kind_from_string(fam["kind"].get<std::string>());
        } catch (const InputError &e) {
            fail(path, e.what());
        }
        if (fam.contains("phi")) spec.phi = number(path, fam["phi"], "family.phi");
        if (!(spec.phi > 0.0)) fail(path, "family.phi must be positive");
    } else if (spec.model_name == "linear_gaussian" || spec.model_name == "cond_demo") {
        spec.family = FamilyKind::Normal;
    }

    if (doc.contains("data")) spec.data = resolve(path, doc["data"], "data");

    if (doc.contains("param_box")) {
        const json &box = doc["param_box"];
        if (!box.is_object()) fail(path, "param_box must be an object keyed by parameter name");
        for (const auto &[name, b] : box.items()) {
            only_keys(path, b, "param_box." + name, {"lower", "upper", "scale"});
            BoxOverride o;
            o.name = name;
            if (b.contains("lower")) o.lower = number(path, b["lower"], "param_box." + name + ".lower");
            if (b.contains("upper")) o.upper = number(path, b["upper"], "param_box." + name + ".upper");
            if (b.contains("scale")) o.scale = parse_scale(path, b["scale"]);
            spec.box_overrides.push_back(o);
        }
    }

    if (doc.contains("pinned_theta")) {
        const json &pins = doc["pinned_theta"];
        if (!pins.is_array()) fail(path, "pinned_theta must be a list of parameter vectors");
        for (const auto &row : pins) {
            if (!row.is_array()) fail(path, "pinned_theta entries must be lists of numbers");
            std::vector<double> theta;
            for (const auto &v : row) theta.push_back(number(path, v, "pinned_theta entry"));
            spec.sampler.pinned.push_back(std::move(theta));
        }
    }

    if (doc.contains("sampler")) {
        const json &s = doc["sampler"];
        only_keys(path, s, "sampler", {"M", "seed", "include_corners"});
        if (s.contains("M")) spec.sampler.count = count(path, s["M"], "sampler.M");
        if (s.contains("M") && spec.sampler.count < 1) fail(path, "sampler.M must be at least 1");
        if (s.contains("seed")) {
            if (!s["seed"].is_number_unsigned()) fail(path, "sampler.seed must be a non-negative integer");
            spec.sampler.seed = s["seed"].get<std::uint64_t>();
            spec.seed_source = "spec";
        }
        if (s.contains("include_corners")) {
            if (!s["include_corners"].is_boolean()) fail(path, "sampler.include_corners must be true or false");
            spec.sampler.include_corners = s["include_corners"].get<bool>();
        }
    }

    if (doc.contains("tolerances")) {
        const json &t = doc["tolerances"];
        only_keys(path, t, "tolerances", {"tol_rel", "tol_abs"});
        if (t.contains("tol_rel")) spec.tolerances.tol_rel = number(path, t["tol_rel"], "tolerances.tol_rel");
        if (t.contains("tol_abs")) spec.tolerances.tol_abs = number(path, t["tol_abs"], "tolerances.tol_abs");
        if (!(spec.tolerances.tol_rel > 0.0) || !(spec.tolerances.tol_abs > 0.0))
            fail(path, "tolerances must be positive");
    }

    if (doc.contains("declared_factorization")) {
        const json &f = doc["declared_factorization"];
        only_keys(path, f, "declared_factorization", {"N"});
        if (!f.contains("N")) fail(path, "declared_factorization needs N");
        spec.declared_factorization = count(path, f["N"], "declared_factorization.N");
    }
    return spec;
}

Dataset read_data_csv(const std::filesystem::path &path) {
    const auto lines = content_lines(read_file(path));
    if (lines.empty()) fail(path, "empty data file");
    const auto header = split_csv(lines.front().second);
    if (header.size() < 2 || header[0] != "x" || header[1] != "z")
        fail(path, "header must start with x,z (then y_1..y_m and optionally trials)");
    std::size_t m = 0;
    bool has_trials = false;
    for (std::size_t c = 2; c < header.size(); ++c) {
        if (header[c] == "trials" && c + 1 == header.size()) {
            has_trials = true;
        } else if (header[c] == "y_" + std::to_string(m + 1)) {
            ++m;
        } else {
            std::ostringstream os;
            os << path.string() << ":" << lines.front().first << ": unexpected column '" << header[c]
               << "' (expected y_" << m + 1 << " or a final trials column)";
            throw InputError(os.str());
        }
    }

    Dataset data;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto &[no, line] = lines[i];
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            std::ostringstream os;
            os << path.string() << ":" << no << ": expected " << header.size() << " columns, found " << cells.size();
            throw InputError(os.str());
        }
        data.x.push_back(parse_real(path, no, cells[0]));
        const double z = parse_real(path, no, cells[1]);
        if (z == 0.0) {
            std::ostringstream os;
            os << path.string() << ":" << no << ": z = 0; the offsets z_l must all be non-zero";
            throw InputError(os.str());
        }
        data.aux.z.push_back(z);
        std::vector<double> y;
        for (std::size_t c = 0; c < m; ++c) y.push_back(parse_real(path, no, cells[2 + c]));
        data.aux.y.push_back(std::move(y));
        if (has_trials) data.aux.trials.push_back(parse_real(path, no, cells.back()));
    }
    if (data.x.empty()) fail(path, "no data rows");
    try {
        data.validate();
    } catch (const InputError &e) {
        fail(path, e.what());
    }
    return data;
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path &path) {
    const auto lines = content_lines(read_file(path));
    if (lines.empty()) fail(path, "empty matrix file");
    std::vector<std::vector<double>> rows;
    for (const auto &[no, line] : lines) {
        const auto cells = split_csv(line);
        if (!rows.empty() && cells.size() != rows.front().size()) {
            std::ostringstream os;
            os << path.string() << ":" << no << ": ragged row with " << cells.size() << " entries, expected "
               << rows.front().size();
            throw InputError(os.str());
        }
        std::vector<double> row;
        for (const auto &c : cells) row.push_back(parse_real(path, no, c));
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

BuiltModel build_model(const ModelSpec &spec) {
    auto apply_box = [&](auto &model) {
        for (const auto &o : spec.box_overrides) {
            std::size_t i = 0;
            while (i < model.param_names.size() && model.param_names[i] != o.name) ++i;
            if (i == model.param_names.size()) fail(spec.path, "param_box names unknown parameter '" + o.name + "'");
            auto &b = model.box[i];
            if (o.lower) b.lower = *o.lower;
            if (o.upper) b.upper = *o.upper;
            if (o.scale) b.scale = *o.scale;
            if (!(b.lower < b.upper)) fail(spec.path, "param_box." + o.name + " needs lower < upper");
            if (b.scale == Scale::Log && !(b.lower > 0.0))
                fail(spec.path, "param_box." + o.name + " on log scale needs a positive lower bound");
        }
        for (const auto &pin : spec.sampler.pinned) {
            if (pin.size() != model.p()) fail(spec.path, "pinned_theta entries need one value per parameter");
            if (!box_contains(model.box, pin)) fail(spec.path, "pinned_theta lies outside the parameter box");
        }
    };

    if (spec.model_name == "quartic") {
        auto m = zoo::quartic_counterexample(spec.p);
        apply_box(m);
        if (spec.declared_factorization) fail(spec.path, "quartic model has no mean structure to factorize");
        return m;
    }

    MeanModel m;
    if (spec.model_name == "armitage_doll") {
        m = zoo::armitage_doll(spec.stages);
    } else if (spec.model_name == "two_mutation") {
        m = zoo::two_mutation();
    } else if (spec.model_name == "cond_demo") {
        m = zoo::cond_demo();
    } else {
        const Eigen::MatrixXd design = read_matrix_csv(*spec.design);
        m = spec.model_name == "poisson_glm" ? zoo::poisson_glm(design) : zoo::linear_gaussian(design);
    }
    apply_box(m);
    if (spec.declared_factorization) {
        // A declared count replaces the built-in one; the combination
        // functions are kept only when the counts agree.
        if (!m.factorization || m.factorization->count != *spec.declared_factorization) {
            Factorization f;
            f.count = *spec.declared_factorization;
            m.factorization = f;
        }
    }
    return m;
}

} // namespace identrank
