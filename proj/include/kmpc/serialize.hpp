#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "kmpc/arx.hpp"
#include "kmpc/model.hpp"
#include "kmpc/qp.hpp"
#include "kmpc/types.hpp"

namespace kmpc {

using json = nlohmann::json;

inline json matrix_to_json(const Mat& M) {
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Mat matrix_from_json(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("matrix_from_json: expected array of rows");
    const Index rows = static_cast<Index>(j.size());
    if (rows == 0) return Mat(0, 0);
    const Index cols = static_cast<Index>(j.at(0).size());
    Mat M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& row = j.at(static_cast<std::size_t>(i));
        if (static_cast<Index>(row.size()) != cols) {
            throw std::invalid_argument("matrix_from_json: ragged rows");
        }
        for (Index c = 0; c < cols; ++c) {
            M(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
        if (!M.row(i).allFinite()) {
            throw std::invalid_argument("matrix_from_json: non-finite entry");
        }
    }
    return M;
}

inline json vector_to_json(const Vec& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline Vec vector_from_json(const json& j) {
    Vec v(static_cast<Index>(j.size()));
    for (Index i = 0; i < v.size(); ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

inline json to_json(const DelaySpec& d) {
    return json{{"state_dim", d.state_dim},
                {"input_dim", d.input_dim},
                {"state_delays", d.state_delays},
                {"input_delays", d.input_delays},
                {"sample_period", d.sample_period}};
}

inline DelaySpec delays_from_json(const json& j) {
    DelaySpec d;
    d.state_dim = j.at("state_dim").get<int>();
    d.input_dim = j.at("input_dim").get<int>();
    d.state_delays = j.at("state_delays").get<int>();
    d.input_delays = j.at("input_delays").get<int>();
    d.sample_period = j.at("sample_period").get<double>();
    return d;
}

inline json to_json(const KoopmanModel& model) {
    json j;
    j["kind"] = "koopman";
    j["basis"] = {{"embedded_dim", model.basis.embedded_dim()},
                  {"max_degree", model.basis.max_degree()}};
    j["delays"] = to_json(model.delays);
    j["A_hat"] = matrix_to_json(model.A_hat);
    j["B_hat"] = matrix_to_json(model.B_hat);
    j["C"] = matrix_to_json(model.C);
    j["A"] = matrix_to_json(model.A);
    j["B"] = matrix_to_json(model.B);
    j["P"] = matrix_to_json(model.P);
    j["lambda"] = model.lambda;
    j["density"] = model.density;
    j["bottom_block_deviation"] = model.bottom_block_deviation;
    if (model.column_scaling.size() > 0) {
        j["column_scaling"] = vector_to_json(model.column_scaling);
    }
    return j;
}

inline KoopmanModel koopman_from_json(const json& j) {
    if (j.at("kind").get<std::string>() != "koopman") {
        throw std::invalid_argument("koopman_from_json: kind mismatch");
    }
    const MonomialBasis basis(j.at("basis").at("embedded_dim").get<int>(),
                              j.at("basis").at("max_degree").get<int>());
    KoopmanModel model(basis, delays_from_json(j.at("delays")));
    model.A_hat = matrix_from_json(j.at("A_hat"));
    model.B_hat = matrix_from_json(j.at("B_hat"));
    model.C = matrix_from_json(j.at("C"));
    model.A = matrix_from_json(j.at("A"));
    model.B = matrix_from_json(j.at("B"));
    model.P = matrix_from_json(j.at("P"));
    model.lambda = j.at("lambda").get<double>();
    model.density = j.at("density").get<double>();
    model.bottom_block_deviation = j.value("bottom_block_deviation", 0.0);
    if (j.contains("column_scaling")) {
        model.column_scaling = vector_from_json(j.at("column_scaling"));
    }
    model.check_shapes();
    return model;
}

inline json to_json(const LinearSSModel& model) {
    json j;
    j["kind"] = "linear-ss";
    j["output_lags"] = model.output_lags;
    j["input_lags"] = model.input_lags;
    j["state_dim"] = model.state_dim;
    j["input_dim"] = model.input_dim;
    j["sample_period"] = model.sample_period;
    j["A_L"] = matrix_to_json(model.A_L);
    j["B_L"] = matrix_to_json(model.B_L);
    j["C_L"] = matrix_to_json(model.C_L);
    json acoef = json::array();
    for (const Mat& M : model.A_coeffs) acoef.push_back(matrix_to_json(M));
    json bcoef = json::array();
    for (const Mat& M : model.B_coeffs) bcoef.push_back(matrix_to_json(M));
    j["A_coeffs"] = std::move(acoef);
    j["B_coeffs"] = std::move(bcoef);
    return j;
}

inline LinearSSModel linear_from_json(const json& j) {
    if (j.at("kind").get<std::string>() != "linear-ss") {
        throw std::invalid_argument("linear_from_json: kind mismatch");
    }
    LinearSSModel model;
    model.output_lags = j.at("output_lags").get<int>();
    model.input_lags = j.at("input_lags").get<int>();
    model.state_dim = j.at("state_dim").get<int>();
    model.input_dim = j.at("input_dim").get<int>();
    model.sample_period = j.at("sample_period").get<double>();
    model.A_L = matrix_from_json(j.at("A_L"));
    model.B_L = matrix_from_json(j.at("B_L"));
    model.C_L = matrix_from_json(j.at("C_L"));
    for (const json& M : j.at("A_coeffs")) model.A_coeffs.push_back(matrix_from_json(M));
    for (const json& M : j.at("B_coeffs")) model.B_coeffs.push_back(matrix_from_json(M));
    return model;
}

/// Fixture serialization for the QP layer.
inline json to_json(const DenseQp& qp) {
    json j;
    j["Q"] = matrix_to_json(qp.Q);
    j["q"] = vector_to_json(qp.q);
    j["constant"] = qp.constant;
    j["A_in"] = matrix_to_json(qp.A_in);
    j["b_in"] = vector_to_json(qp.b_in);
    json s = json::array();
    for (const Vec& si : qp.s) s.push_back(vector_to_json(si));
    j["s"] = std::move(s);
    return j;
}

inline json to_json(const QpSolution& sol) {
    json j;
    j["U"] = vector_to_json(sol.U);
    j["dual"] = vector_to_json(sol.dual);
    j["objective"] = sol.objective;
    j["primal_residual"] = sol.primal_residual;
    j["dual_residual"] = sol.dual_residual;
    j["comp_slack"] = sol.comp_slack;
    j["iterations"] = sol.iterations;
    j["status"] = to_string(sol.status);
    j["polished"] = sol.polished;
    return j;
}

inline void save_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_json: cannot open '" + path + "'");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("save_json: write failed for '" + path + "'");
}

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_json: cannot open '" + path + "'");
    json j;
    in >> j;
    return j;
}

}  // namespace kmpc
