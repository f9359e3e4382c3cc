#include "solvflow/io.hpp"

#include "solvflow/error.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace solvflow {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    return out;
}

nlohmann::ordered_json number(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t, const SolvsolitonParams& params,
                          const CsvColumns& extra) {
    const bool full = t.dim == 4;
    if (extra.margins && !full) throw Error(ErrorKind::InvalidArgument, "margins need a full-system trajectory");
    if (extra.phi && extra.phi->size() != t.size()) {
        throw Error(ErrorKind::InvalidArgument, "Phi samples do not match the trajectory");
    }
    os << (full ? "s,x,y,z,w" : "s,c1,c2");
    if (extra.margins) os << ",m_y,m_nx_minus_y,m_z_minus_s0,m_minus_z";
    if (extra.phi) os << ",Phi";
    os << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
        os << format_double(t.times[i]);
        for (Eigen::Index k = 0; k < t.states[i].size(); ++k) os << ',' << format_double(t.states[i][k]);
        if (extra.margins) {
            for (double m : omega_margins(t.point(i), params)) os << ',' << format_double(m);
        }
        if (extra.phi) os << ',' << format_double((*extra.phi)[i]);
        os << '\n';
    }
}

Trajectory read_trajectory_csv(std::istream& is) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line[0] != '#') break;
    }
    if (line.empty()) throw Error(ErrorKind::ParseError, "empty trajectory file");
    const auto header = split(line, ',');
    const std::vector<std::string> wanted{"s", "x", "y", "z", "w"};
    std::vector<std::size_t> col(wanted.size(), header.size());
    for (std::size_t i = 0; i < header.size(); ++i)
        for (std::size_t k = 0; k < wanted.size(); ++k)
            if (header[i] == wanted[k]) col[k] = i;
    for (std::size_t k = 0; k < wanted.size(); ++k) {
        if (col[k] == header.size()) {
            throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": missing column '" + wanted[k] + "'");
        }
    }

    Trajectory t;
    t.dim = 4;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) {
            throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": expected " +
                                                   std::to_string(header.size()) + " fields, got " +
                                                   std::to_string(cells.size()));
        }
        double v[5];
        for (std::size_t k = 0; k < 5; ++k) {
            try {
                std::size_t used = 0;
                v[k] = std::stod(cells[col[k]], &used);
                if (used != cells[col[k]].size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ", field '" + wanted[k] +
                                                       "': not a number: '" + cells[col[k]] + "'");
            }
        }
        if (!t.times.empty() && !(v[0] > t.times.back())) {
            throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": times must increase");
        }
        t.times.push_back(v[0]);
        t.states.push_back(Eigen::Vector4d(v[1], v[2], v[3], v[4]));
    }
    if (t.empty()) throw Error(ErrorKind::ParseError, "trajectory file has no samples");
    return t;
}

void write_profile_csv(std::ostream& os, const MetricProfile& p) {
    const bool phi = !p.phi.empty();
    const std::size_t m = p.L_spectrum.empty() ? 0 : p.L_spectrum.front().size();
    os << "s,c,h,f_prime";
    if (phi) os << ",Phi";
    for (std::size_t k = 0; k < m; ++k) os << ",L" << k;
    os << '\n';
    for (std::size_t i = 0; i < p.s.size(); ++i) {
        os << format_double(p.s[i]) << ',' << format_double(p.c[i]) << ',' << format_double(p.h[i]) << ','
           << format_double(p.f_prime[i]);
        if (phi) os << ',' << format_double(p.phi[i]);
        for (double l : p.L_spectrum[i]) os << ',' << format_double(l);
        os << '\n';
    }
}

nlohmann::ordered_json to_json(const SolvsolitonParams& p) {
    nlohmann::ordered_json j;
    j["name"] = p.name;
    j["n"] = p.n;
    j["d_spectrum"] = p.d_spectrum;
    j["tr_d"] = p.tr_d;
    j["tr_d2"] = p.tr_d2;
    j["tr_d0_sq"] = p.tr_d0_sq;
    j["lambda0"] = p.lambda0;
    j["s0"] = p.s0;
    j["lambda"] = p.lambda;
    j["scalar_flat"] = p.scalar_flat;
    j["metric_scale"] = p.metric_scale;
    return j;
}

nlohmann::ordered_json to_json(const LieAlgebraData& alg) {
    nlohmann::ordered_json j;
    j["dim"] = alg.dim();
    nlohmann::ordered_json br = nlohmann::ordered_json::array();
    for (const auto& b : alg.brackets()) br.push_back({b.i + 1, b.j + 1, b.k + 1, b.value});
    j["brackets"] = br;
    return j;
}

nlohmann::ordered_json to_json(const Preset& preset) {
    nlohmann::ordered_json j;
    j["name"] = preset.name;
    j["algebra"] = to_json(preset.algebra);
    j["params"] = to_json(preset.params);
    nlohmann::ordered_json det;
    det["lambda0"] = preset.detection.lambda0;
    std::vector<double> diag(preset.detection.D.diagonal().data(),
                             preset.detection.D.diagonal().data() + preset.detection.D.rows());
    det["D_diagonal"] = diag;
    det["derivation_residual"] = preset.detection.derivation_residual;
    j["soliton"] = det;
    return j;
}

nlohmann::ordered_json to_json(const RateReport& r) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json fits = nlohmann::ordered_json::array();
    for (const auto& f : r.fits) {
        fits.push_back({{"quantity", f.quantity},
                        {"predicted_limit", number(f.predicted_limit)},
                        {"window", {f.s_lo, f.s_hi}},
                        {"fitted_value", number(f.fitted_value)},
                        {"relative_error", number(f.relative_error)}});
    }
    j["fits"] = fits;
    j["alpha"] = r.alpha;
    j["alpha_windows"] = {r.alpha_early, r.alpha_late};
    j["alpha_variation"] = r.alpha_variation;
    j["y_decay_ratio"] = r.y_decay_ratio;
    return j;
}

nlohmann::ordered_json to_json(const Event& e) {
    nlohmann::ordered_json j;
    j["s"] = e.s;
    j["kind"] = std::string(to_string(e.kind));
    if (e.kind == EventKind::OmegaExit) {
        static const char* names[] = {"y > 0", "y < n x", "z > s0", "z < 0"};
        j["bound"] = e.detail >= 0 && e.detail < 4 ? names[e.detail] : "?";
    } else if (e.detail >= 0 || e.kind == EventKind::WMinusNXSignChange) {
        j["detail"] = e.detail;
    }
    std::vector<double> st(e.state.data(), e.state.data() + e.state.size());
    j["state"] = st;
    return j;
}

LieAlgebraData algebra_from_json(const nlohmann::json& j) {
    try {
        const int dim = j.at("dim").get<int>();
        if (dim < 1) throw Error(ErrorKind::ParseError, "field 'dim': must be positive");
        std::vector<LieAlgebraData::Bracket> br;
        const auto& arr = j.at("brackets");
        if (!arr.is_array()) throw Error(ErrorKind::ParseError, "field 'brackets': expected an array");
        for (std::size_t idx = 0; idx < arr.size(); ++idx) {
            const auto& b = arr[idx];
            if (!b.is_array() || b.size() != 4) {
                throw Error(ErrorKind::ParseError,
                            "field 'brackets[" + std::to_string(idx) + "]': expected [i, j, k, value]");
            }
            const int i = b[0].get<int>(), jj = b[1].get<int>(), k = b[2].get<int>();
            if (i < 1 || jj < 1 || k < 1 || i > dim || jj > dim || k > dim) {
                throw Error(ErrorKind::ParseError,
                            "field 'brackets[" + std::to_string(idx) + "]': index out of 1.." + std::to_string(dim));
            }
            br.push_back({i - 1, jj - 1, k - 1, b[3].get<double>()});
        }
        std::vector<std::string> labels;
        if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
        return LieAlgebraData(dim, br, labels);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
}

Preset load_preset(const std::string& name_or_path) {
    namespace fs = std::filesystem;
    if (name_or_path.size() > 5 && name_or_path.substr(name_or_path.size() - 5) == ".json") {
        std::ifstream in(name_or_path);
        if (!in) throw Error(ErrorKind::ParseError, "cannot open " + name_or_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorKind::ParseError, name_or_path + ": " + e.what());
        }
        const std::string name = j.value("name", fs::path(name_or_path).stem().string());
        return preset_from_algebra(name, algebra_from_json(j));
    }
    return preset(name_or_path);
}

}  // namespace solvflow
