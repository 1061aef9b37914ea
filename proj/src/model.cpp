#include "identrank/model.hpp"

#include <cmath>
#include <sstream>

#include "identrank/errors.hpp"

namespace identrank {

bool box_contains(const ParamBox &box, std::span<const double> theta) {
    if (box.size() != theta.size()) return false;
    for (std::size_t i = 0; i < theta.size(); ++i)
        if (!box[i].contains(theta[i])) return false;
    return true;
}

std::vector<double> typical_magnitudes(const ParamBox &box) {
    std::vector<double> out;
    for (const auto &b : box) out.push_back(b.scale == Scale::Log ? b.lower : 1.0);
    return out;
}

void DataAux::validate() const {
    if (z.empty()) throw InputError("dataset has no observations");
    if (y.size() != z.size()) throw InputError("covariate rows do not match the number of observations");
    if (!trials.empty() && trials.size() != z.size())
        throw InputError("trials column does not match the number of observations");
    const std::size_t width = y.front().size();
    for (std::size_t l = 0; l < z.size(); ++l) {
        std::ostringstream where;
        where << " (observation " << l + 1 << ")";
        if (!std::isfinite(z[l])) throw InputError("non-finite offset z" + where.str());
        if (z[l] == 0.0) throw InputError("offset z must be non-zero" + where.str());
        if (y[l].size() != width) throw InputError("ragged covariate row" + where.str());
        for (double v : y[l])
            if (!std::isfinite(v)) throw InputError("non-finite covariate" + where.str());
        if (!trials.empty() && (!(trials[l] >= 1.0) || std::floor(trials[l]) != trials[l]))
            throw InputError("trials must be a positive integer" + where.str());
    }
}

void Dataset::validate() const {
    aux.validate();
    if (x.size() != aux.size()) throw InputError("observation column does not match auxiliary data");
}

double MeanModel::mean(std::span<const double> theta, const Observation &obs) const {
    std::vector<SecondOrder> args(theta.begin(), theta.end());
    return mean(std::span<const SecondOrder>(args), obs).value();
}

double MeanModel::response_value(std::span<const double> theta, const Observation &obs) const {
    std::vector<SecondOrder> args(theta.begin(), theta.end());
    return response(args, obs).value();
}

void MeanModel::validate_data(const DataAux &aux) const {
    aux.validate();
    if (check_data) check_data(aux);
}

} // namespace identrank
