#pragma once

// Matrix, lattice and CSV persistence.
//
// Matrices are JSON objects {"rows", "cols", "dtype", "data"} with data in
// row-major order; complex entries are [re, im] pairs. Doubles are printed in
// shortest round-trip form, so a write followed by a read is bit-exact.
// All writes go to a temporary sibling file that is then renamed.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "geometry.hpp"
#include "types.hpp"

namespace holo_rmt {

using Json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline void atomic_write(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Json parse_json(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(origin + ": invalid JSON: " + e.what());
    }
}

inline Json matrix_to_json(const RealMatrix& m) {
    Json data = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    }
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"dtype", "float64"}, {"data", std::move(data)}};
}

inline Json matrix_to_json(const ComplexMatrix& m) {
    Json data = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    }
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"dtype", "complex128"}, {"data", std::move(data)}};
}

namespace detail {

struct MatrixHeader {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::string dtype;
};

inline MatrixHeader matrix_header(const Json& j, const std::string& origin) {
    if (!j.is_object()) throw ConfigError(origin + ": matrix file must hold a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "rows" && key != "cols" && key != "dtype" && key != "data") {
            throw ConfigError(origin + ": unknown key '" + key + "' in matrix file");
        }
    }
    if (!j.contains("rows") || !j["rows"].is_number_integer() || j["rows"].get<long long>() < 1 ||
        !j.contains("cols") || !j["cols"].is_number_integer() || j["cols"].get<long long>() < 1) {
        throw ConfigError(origin + ": matrix file needs positive integer 'rows' and 'cols'");
    }
    if (!j.contains("data") || !j["data"].is_array()) throw ConfigError(origin + ": matrix file needs a 'data' array");
    MatrixHeader h;
    h.rows = j["rows"].get<Eigen::Index>();
    h.cols = j["cols"].get<Eigen::Index>();
    h.dtype = j.value("dtype", std::string("float64"));
    if (h.dtype != "float64" && h.dtype != "complex128") {
        throw ConfigError(origin + ": dtype must be float64 or complex128");
    }
    if (static_cast<Eigen::Index>(j["data"].size()) != h.rows * h.cols) {
        throw ConfigError(origin + ": data holds " + std::to_string(j["data"].size()) + " entries, expected " +
                          std::to_string(h.rows * h.cols));
    }
    return h;
}

inline double json_number(const Json& v, const std::string& origin) {
    if (!v.is_number()) throw ConfigError(origin + ": matrix entries must be numbers");
    return v.get<double>();
}

}  // namespace detail

inline ComplexMatrix complex_matrix_from_json(const Json& j, const std::string& origin = "matrix") {
    const auto h = detail::matrix_header(j, origin);
    ComplexMatrix m(h.rows, h.cols);
    const Json& data = j["data"];
    for (Eigen::Index i = 0; i < h.rows; ++i) {
        for (Eigen::Index c = 0; c < h.cols; ++c) {
            const Json& v = data[static_cast<std::size_t>(i * h.cols + c)];
            if (h.dtype == "complex128") {
                if (!v.is_array() || v.size() != 2) throw ConfigError(origin + ": complex entries must be [re, im]");
                m(i, c) = {detail::json_number(v[0], origin), detail::json_number(v[1], origin)};
            } else {
                m(i, c) = detail::json_number(v, origin);
            }
        }
    }
    return m;
}

inline RealMatrix real_matrix_from_json(const Json& j, const std::string& origin = "matrix") {
    const auto h = detail::matrix_header(j, origin);
    if (h.dtype != "float64") throw ConfigError(origin + ": expected a real (float64) matrix");
    RealMatrix m(h.rows, h.cols);
    const Json& data = j["data"];
    for (Eigen::Index i = 0; i < h.rows; ++i) {
        for (Eigen::Index c = 0; c < h.cols; ++c) {
            m(i, c) = detail::json_number(data[static_cast<std::size_t>(i * h.cols + c)], origin);
        }
    }
    return m;
}

template <class Matrix>
void write_matrix(const std::filesystem::path& path, const Matrix& m) {
    atomic_write(path, matrix_to_json(m).dump(1) + "\n");
}

inline ComplexMatrix read_complex_matrix(const std::filesystem::path& path) {
    return complex_matrix_from_json(parse_json(read_text(path), path.string()), path.string());
}

inline RealMatrix read_real_matrix(const std::filesystem::path& path) {
    return real_matrix_from_json(parse_json(read_text(path), path.string()), path.string());
}

inline Json lattice_to_json(const WavenumberLattice& lat) {
    Json pts = Json::array();
    for (const auto& p : lat.points) pts.push_back(Json::array({p.x, p.y}));
    return Json{{"semi_axis_x", lat.semi_axis_x},
                {"semi_axis_y", lat.semi_axis_y},
                {"count", lat.size()},
                {"area_estimate", lat.area_estimate()},
                {"points", std::move(pts)}};
}

/// Two-column CSV with a header row.
inline std::string csv_columns(const std::string& header, const std::vector<double>& a, const std::vector<double>& b) {
    std::string out = header + "\n";
    for (std::size_t i = 0; i < a.size(); ++i) {
        out += format_double(a[i]);
        out += ',';
        out += format_double(b[i]);
        out += '\n';
    }
    return out;
}

/// `index,mi_nats` rows.
inline std::string samples_csv(const std::vector<double>& samples, std::uint64_t first_index = 0) {
    std::string out = "index,mi_nats\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out += std::to_string(first_index + i);
        out += ',';
        out += format_double(samples[i]);
        out += '\n';
    }
    return out;
}

}  // namespace holo_rmt
