#include "ntclust/data_io.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace nt {

namespace {

constexpr char kMatrixMagic[4] = {'N', 'T', 'B', '1'};
constexpr char kModelMagic[4] = {'N', 'T', 'M', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is, const std::string& path) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw data_error(path + ": truncated file at offset " + std::to_string(is.tellg()));
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
}

double read_f64(std::istream& is, const std::string& path) {
    const std::uint64_t bits = read_u64(is, path);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

Mat load_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw data_error(path + ": cannot open file");
    std::vector<std::vector<double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        const char* p = line.data();
        const char* end = p + line.size();
        while (true) {
            while (p < end && *p == ' ') ++p;
            double v = 0.0;
            const auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc{})
                throw data_error(path + ": malformed number at line " + std::to_string(lineno));
            row.push_back(v);
            p = res.ptr;
            while (p < end && *p == ' ') ++p;
            if (p == end) break;
            if (*p != ',') throw data_error(path + ": unexpected character at line " + std::to_string(lineno));
            ++p;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw data_error(path + ": row length mismatch at line " + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw data_error(path + ": empty matrix file");
    Mat m(rows.front().size(), rows.size());  // samples as columns
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(j, i) = rows[i][j];
    return m;
}

Mat load_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error(path + ": cannot open file");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMatrixMagic, 4) != 0)
        throw data_error(path + ": bad magic, not an NTB1 matrix file");
    const std::uint64_t rows = read_u64(is, path);  // samples
    const std::uint64_t cols = read_u64(is, path);  // dimensions
    if (rows == 0 || cols == 0 || rows > (1ull << 40) || cols > (1ull << 40))
        throw data_error(path + ": implausible dimensions in header");
    Mat m(cols, rows);
    for (std::uint64_t r = 0; r < rows; ++r)
        for (std::uint64_t c = 0; c < cols; ++c) m(c, r) = read_f64(is, path);
    return m;
}

}  // namespace

Mat load_matrix(const std::string& path, MatrixFormat format) {
    Mat m = format == MatrixFormat::csv ? load_csv(path) : load_binary(path);
    if (!m.allFinite()) throw data_error(path + ": matrix contains non-finite entries");
    return m;
}

void save_matrix(const Mat& matrix, const std::string& path, MatrixFormat format) {
    if (matrix.size() == 0) throw data_error(path + ": refusing to write an empty matrix");
    std::ofstream os(path, format == MatrixFormat::binary ? std::ios::binary : std::ios::out);
    if (!os) throw data_error(path + ": cannot open file for writing");
    const Eigen::Index k = matrix.cols(), n = matrix.rows();
    if (format == MatrixFormat::csv) {
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j) os << ',';
                os << format_double(matrix(j, i));
            }
            os << '\n';
        }
    } else {
        os.write(kMatrixMagic, 4);
        write_u64(os, static_cast<std::uint64_t>(k));
        write_u64(os, static_cast<std::uint64_t>(n));
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < n; ++j) write_f64(os, matrix(j, i));
    }
    if (!os) throw data_error(path + ": write failed");
}

Mat standardize(const Mat& matrix) {
    Mat out = matrix;
    const double n = static_cast<double>(matrix.rows());
    for (Eigen::Index i = 0; i < matrix.cols(); ++i) {
        const double mean = out.col(i).mean();
        out.col(i).array() -= mean;
        const double var = out.col(i).squaredNorm() / n;
        if (var <= 0.0) throw data_error("standardize: zero-variance sample at index " + std::to_string(i));
        out.col(i) /= std::sqrt(var);
    }
    return out;
}

std::pair<Mat, Partition> synth_clusters(int clusters, int dim, int per_cluster, double spread,
                                         std::uint64_t seed) {
    if (clusters < 1 || dim < 1 || per_cluster < 1) throw config_error("synth_clusters: counts must be positive");
    if (!(spread > 0.0)) throw config_error("synth_clusters: spread must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Mat centroids(dim, clusters);
    const double min_sep = 10.0 * spread;
    for (int attempt = 0; attempt < 10000; ++attempt) {
        for (int c = 0; c < clusters; ++c)
            for (int d = 0; d < dim; ++d) centroids(d, c) = 10.0 * gauss(rng);
        bool separated = true;
        for (int a = 0; a < clusters && separated; ++a)
            for (int b = a + 1; b < clusters; ++b)
                if ((centroids.col(a) - centroids.col(b)).norm() < min_sep) {
                    separated = false;
                    break;
                }
        if (separated) break;
        if (attempt == 9999) throw numeric_error("synth_clusters: could not satisfy centroid separation");
    }

    Mat x(dim, static_cast<Eigen::Index>(clusters) * per_cluster);
    Partition labels;
    labels.labels.resize(x.cols());
    Eigen::Index col = 0;
    for (int c = 0; c < clusters; ++c) {
        for (int p = 0; p < per_cluster; ++p, ++col) {
            for (int d = 0; d < dim; ++d) x(d, col) = centroids(d, c) + spread * gauss(rng);
            labels.labels[col] = c + 1;
        }
    }
    return {x, labels};
}

void save_model(const TransformModel& model, const HyperParams& hyper, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error(path + ": cannot open file for writing");
    const std::uint64_t m = model.A.rows(), n = model.A.cols();
    const std::uint64_t c_d = model.params.taus.size(), c_s = model.params.nus.size();
    os.write(kModelMagic, 4);
    write_u64(os, m);
    write_u64(os, n);
    write_u64(os, c_d);
    write_u64(os, c_s);
    os.put(model.identity_mode ? 1 : 0);
    for (std::uint64_t r = 0; r < m; ++r)
        for (std::uint64_t c = 0; c < n; ++c) write_f64(os, model.A(r, c));
    for (const auto& t : model.params.taus)
        for (Eigen::Index r = 0; r < t.size(); ++r) write_f64(os, t[r]);
    for (const auto& v : model.params.nus)
        for (Eigen::Index r = 0; r < v.size(); ++r) write_f64(os, v[r]);
    HyperParams snap = hyper;  // keep the snapshot consistent with the payload
    snap.M = static_cast<int>(m);
    snap.C_d = static_cast<int>(c_d);
    snap.C_s = static_cast<int>(c_s);
    const std::string snapshot = config_to_json(snap);
    write_u64(os, snapshot.size());
    os.write(snapshot.data(), static_cast<std::streamsize>(snapshot.size()));
    if (!os) throw data_error(path + ": write failed");
}

TransformModel load_model(const std::string& path, HyperParams* hyper_out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error(path + ": cannot open file");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kModelMagic, 4) != 0)
        throw data_error(path + ": bad magic, not an NTM1 model file");
    const std::uint64_t m = read_u64(is, path);
    const std::uint64_t n = read_u64(is, path);
    const std::uint64_t c_d = read_u64(is, path);
    const std::uint64_t c_s = read_u64(is, path);
    if (m == 0 || n == 0 || c_d == 0 || c_s == 0 || m > (1u << 24) || n > (1u << 24) || c_d > (1u << 20) ||
        c_s > (1u << 20))
        throw data_error(path + ": implausible dimensions in header");
    const int identity = is.get();
    if (identity != 0 && identity != 1) throw data_error(path + ": corrupt identity flag");
    if (identity == 1 && m != n) throw data_error(path + ": identity model must be square");

    TransformModel model;
    model.identity_mode = identity == 1;
    model.A.resize(m, n);
    for (std::uint64_t r = 0; r < m; ++r)
        for (std::uint64_t c = 0; c < n; ++c) model.A(r, c) = read_f64(is, path);
    model.params.taus.resize(c_d);
    for (auto& t : model.params.taus) {
        t.resize(m);
        for (std::uint64_t r = 0; r < m; ++r) t[r] = read_f64(is, path);
    }
    model.params.nus.resize(c_s);
    for (auto& v : model.params.nus) {
        v.resize(m);
        for (std::uint64_t r = 0; r < m; ++r) v[r] = read_f64(is, path);
    }
    const std::uint64_t snap_len = read_u64(is, path);
    if (snap_len > (1u << 20)) throw data_error(path + ": implausible configuration block length");
    std::string snapshot(snap_len, '\0');
    is.read(snapshot.data(), static_cast<std::streamsize>(snap_len));
    if (!is) throw data_error(path + ": truncated configuration block");
    is.peek();
    if (!is.eof()) throw data_error(path + ": trailing bytes after model payload");
    const HyperParams hyper = parse_config_json(snapshot);
    if (hyper_out) *hyper_out = hyper;
    if (static_cast<std::uint64_t>(hyper.C_d) != c_d || static_cast<std::uint64_t>(hyper.C_s) != c_s)
        throw data_error(path + ": header and configuration snapshot disagree");
    if (!model.A.allFinite()) throw data_error(path + ": non-finite map entries");
    return model;
}

Partition load_labels(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw data_error(path + ": cannot open file");
    Partition p;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        int v = 0;
        const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
        if (res.ec != std::errc{} || res.ptr != line.data() + line.size())
            throw data_error(path + ": malformed label at line " + std::to_string(lineno));
        p.labels.push_back(v);
    }
    if (p.labels.empty()) throw data_error(path + ": empty label file");
    return p;
}

void save_labels(const Partition& partition, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw data_error(path + ": cannot open file for writing");
    for (int v : partition.labels) os << v << '\n';
    if (!os) throw data_error(path + ": write failed");
}

HyperParams parse_config_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("configuration: ") + e.what());
    }
    if (!j.is_object()) throw config_error("configuration: expected a JSON object");
    HyperParams h;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "lambda0") h.lambda0 = value.get<double>();
            else if (key == "lambda1") h.lambda1 = value.get<double>();
            else if (key == "lambda2") h.lambda2 = value.get<double>();
            else if (key == "lambda3") h.lambda3 = value.get<double>();
            else if (key == "lambda4") h.lambda4 = value.get<double>();
            else if (key == "lambdaE") h.lambdaE = value.get<double>();
            else if (key == "M") h.M = value.get<int>();
            else if (key == "C_d") h.C_d = value.get<int>();
            else if (key == "C_s") h.C_s = value.get<int>();
            else if (key == "iterations") h.iterations = value.get<int>();
            else if (key == "batch_fraction") h.batch_fraction = value.get<double>();
            else if (key == "rho_online") h.rho_online = value.get<double>();
            else if (key == "eps") h.eps = value.get<double>();
            else if (key == "seed") h.seed = value.get<std::uint64_t>();
            else throw config_error("configuration: unknown key '" + key + "'");
        } catch (const nlohmann::json::exception&) {
            throw config_error("configuration: bad value for key '" + key + "'");
        }
    }
    h.validate();
    return h;
}

std::string config_to_json(const HyperParams& hyper) {
    std::ostringstream os;
    os << "{\n"
       << "  \"lambda0\": " << format_double(hyper.lambda0) << ",\n"
       << "  \"lambda1\": " << format_double(hyper.lambda1) << ",\n"
       << "  \"lambda2\": " << format_double(hyper.lambda2) << ",\n"
       << "  \"lambda3\": " << format_double(hyper.lambda3) << ",\n"
       << "  \"lambda4\": " << format_double(hyper.lambda4) << ",\n"
       << "  \"lambdaE\": " << format_double(hyper.lambdaE) << ",\n"
       << "  \"M\": " << hyper.M << ",\n"
       << "  \"C_d\": " << hyper.C_d << ",\n"
       << "  \"C_s\": " << hyper.C_s << ",\n"
       << "  \"iterations\": " << hyper.iterations << ",\n"
       << "  \"batch_fraction\": " << format_double(hyper.batch_fraction) << ",\n"
       << "  \"rho_online\": " << format_double(hyper.rho_online) << ",\n"
       << "  \"eps\": " << format_double(hyper.eps) << ",\n"
       << "  \"seed\": " << hyper.seed << "\n"
       << "}\n";
    return os.str();
}

HyperParams load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw data_error(path + ": cannot open file");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config_json(ss.str());
}

}  // namespace nt
