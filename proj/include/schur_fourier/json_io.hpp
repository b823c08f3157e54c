#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "schur_fourier/errors.hpp"
#include "schur_fourier/functionals.hpp"
#include "schur_fourier/geometry.hpp"
#include "schur_fourier/laws.hpp"
#include "schur_fourier/quadrature.hpp"

namespace sf {

using json = nlohmann::json;

// Specification objects accepted by the CLI and the library loaders:
//   law:  {"family": "...", ...}   body: {"family": "...", ...}
// Field names are documented in the README next to each family.

inline StarBody body_from_json(const json& j) {
    if (!j.is_object() || !j.contains("family"))
        throw SpecError("body spec: expected an object with a \"family\" field");
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "euclidean") return StarBody::euclidean(j.at("dim").get<int>());
    if (fam == "ellipsoid") {
        const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
        const int d = static_cast<int>(rows.size());
        Eigen::MatrixXd a(d, d);
        for (int r = 0; r < d; ++r) {
            if (static_cast<int>(rows[r].size()) != d) throw SpecError("body spec: matrix must be square");
            for (int c = 0; c < d; ++c) a(r, c) = rows[r][c];
        }
        return StarBody::ellipsoid(a);
    }
    if (fam == "weighted_lq")
        return StarBody::weighted_lq(j.at("q").get<double>(),
                                     j.at("weights").get<std::vector<double>>());
    if (fam == "discrete_lp") {
        std::vector<DiscreteAtom> atoms;
        for (const auto& a : j.at("atoms"))
            atoms.push_back({a.at("c").get<double>(), a.at("u").get<std::vector<double>>()});
        return StarBody::discrete_lp(j.at("p").get<double>(), j.at("dim").get<int>(),
                                     std::move(atoms), j.value("require_isotropic", true));
    }
    throw SpecError("body spec: unknown family \"" + fam + "\"");
}

inline json body_to_json(const StarBody& body) {
    json j;
    if (body.get_if<EuclideanBody>()) {
        j["family"] = "euclidean";
        j["dim"] = body.dim();
    } else if (const auto* e = body.get_if<EllipsoidBody>()) {
        j["family"] = "ellipsoid";
        std::vector<std::vector<double>> rows(body.dim(), std::vector<double>(body.dim()));
        for (int r = 0; r < body.dim(); ++r)
            for (int c = 0; c < body.dim(); ++c) rows[r][c] = e->a(r, c);
        j["matrix"] = rows;
    } else if (const auto* e = body.get_if<WeightedLqBody>()) {
        j["family"] = "weighted_lq";
        j["q"] = e->q;
        j["weights"] = e->w;
    } else if (const auto* e = body.get_if<DiscreteLpBody>()) {
        j["family"] = "discrete_lp";
        j["p"] = e->p;
        j["dim"] = e->dim;
        json atoms = json::array();
        for (const auto& a : e->atoms) atoms.push_back({{"c", a.c}, {"u", a.u}});
        j["atoms"] = atoms;
    }
    return j;
}

inline MixingLaw mixing_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "discrete") {
        DiscreteMixing m;
        for (const auto& a : j.at("atoms")) {
            m.w.push_back(a.at(0).get<double>());
            m.y.push_back(a.at(1).get<double>());
        }
        return m;
    }
    if (type == "uniform")
        return UniformMixing{j.at("lo").get<double>(), j.at("hi").get<double>()};
    throw SpecError("mixing spec: unknown type \"" + type + "\"");
}

inline SymmetricLaw law_from_json(const json& j) {
    if (!j.is_object() || !j.contains("family"))
        throw SpecError("law spec: expected an object with a \"family\" field");
    const std::string fam = j.at("family").get<std::string>();
    if (fam == "gaussian")
        return SymmetricLaw::gaussian(j.value("dim", 1), j.value("sigma", 1.0));
    if (fam == "laplace") return SymmetricLaw::laplace(j.value("b", 1.0));
    if (fam == "exp_power")
        return SymmetricLaw::exp_power(j.at("p").get<double>(), body_from_json(j.at("body")));
    if (fam == "stable")
        return SymmetricLaw::stable(j.at("alpha").get<double>(), j.value("c", 1.0));
    if (fam == "pseudo_stable")
        return SymmetricLaw::pseudo_stable(j.at("p").get<double>(), j.value("c1", 1.0),
                                           j.value("c2", 1.0));
    if (fam == "q_stable_mixture")
        return SymmetricLaw::q_stable_mixture(j.at("alpha").get<double>(), j.value("c", 1.0),
                                              mixing_from_json(j.at("mixing")));
    if (fam == "tri_cube") return SymmetricLaw::tri_cube();
    if (fam == "uniform_box") return SymmetricLaw::uniform_box(j.value("half_width", 0.5));
    if (fam == "gaussian_mixture") {
        if (j.contains("covariances")) {
            std::vector<double> w;
            std::vector<Eigen::MatrixXd> covs;
            for (const auto& atom : j.at("atoms")) w.push_back(atom.get<double>());
            for (const auto& rows : j.at("covariances")) {
                const auto m = rows.get<std::vector<std::vector<double>>>();
                Eigen::MatrixXd c(m.size(), m.size());
                for (std::size_t r = 0; r < m.size(); ++r)
                    for (std::size_t cc = 0; cc < m.size(); ++cc) c(r, cc) = m[r][cc];
                covs.push_back(std::move(c));
            }
            return SymmetricLaw::gaussian_mixture(std::move(w), std::move(covs));
        }
        std::vector<double> w, s;
        for (const auto& atom : j.at("atoms")) {
            w.push_back(atom.at(0).get<double>());
            s.push_back(atom.at(1).get<double>());
        }
        return SymmetricLaw::gaussian_mixture(j.value("dim", 1), std::move(w), std::move(s));
    }
    if (fam == "cf_only")
        return SymmetricLaw::cf_only_grid(j.at("grid").get<std::vector<double>>(),
                                          j.at("values").get<std::vector<double>>(),
                                          j.value("cf_positive", true),
                                          j.value("cf_integrable", true));
    throw SpecError("law spec: unknown family \"" + fam + "\"");
}

inline QuadratureSpec quad_from_json(const json& j) {
    QuadratureSpec q;
    if (j.is_null()) return q;
    q.tail_eps = j.value("tail_eps", q.tail_eps);
    q.rel_tol = j.value("rel_tol", q.rel_tol);
    q.max_levels = j.value("max_levels", q.max_levels);
    q.initial_radius = j.value("initial_radius", q.initial_radius);
    q.validate();
    return q;
}

inline SpectralMeasure spectral_from_json(const json& j) {
    std::vector<double> w;
    std::vector<std::vector<double>> s;
    for (const auto& atom : j.at("atoms")) {
        w.push_back(atom.at("w").get<double>());
        if (atom.at("s").is_array())
            s.push_back(atom.at("s").get<std::vector<double>>());
        else
            s.push_back({atom.at("s").get<double>()});
    }
    return SpectralMeasure::from(std::move(w), std::move(s));
}

}  // namespace sf
