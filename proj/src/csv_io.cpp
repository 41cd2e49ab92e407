#include "gphmc/csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "gphmc/errors.hpp"
#include "gphmc/numeric_format.hpp"

namespace gphmc {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        // trim surrounding whitespace
        const auto first = field.find_first_not_of(" \t\r");
        const auto last = field.find_last_not_of(" \t\r");
        fields.push_back(first == std::string::npos ? std::string()
                                                    : field.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

}  // namespace

RawDataset load_csv(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError("'" + path.string() + "' is empty");

    const auto header = split_csv_line(line);
    std::vector<Eigen::Index> coord_cols;
    Eigen::Index y_col = -1;
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(header.size()); ++c) {
        const std::string& name = header[c];
        if (name == "y") {
            y_col = c;
        } else if (name.size() >= 2 && name[0] == 'x') {
            coord_cols.push_back(c);
        }
    }
    if (coord_cols.empty() || y_col < 0)
        throw IoError("'" + path.string() + "': header must name columns x1..xd and y");
    // order coordinates by their numeric suffix
    std::sort(coord_cols.begin(), coord_cols.end(), [&](Eigen::Index a, Eigen::Index b) {
        return std::stoi(header[a].substr(1)) < std::stoi(header[b].substr(1));
    });
    const Eigen::Index dim = static_cast<Eigen::Index>(coord_cols.size());

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> ys;
    RawDataset raw;
    Eigen::Index line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto fields = split_csv_line(line);
        try {
            if (static_cast<Eigen::Index>(fields.size()) < dim + 1)
                throw std::invalid_argument("missing fields");
            Eigen::VectorXd pt(dim);
            for (Eigen::Index j = 0; j < dim; ++j) pt[j] = parse_double(fields[coord_cols[j]]);
            ys.push_back(parse_double(fields[y_col]));
            rows.push_back(std::move(pt));
        } catch (const std::invalid_argument& e) {
            if (strict)
                throw IoError("'" + path.string() + "' line " + std::to_string(line_no) + ": " +
                              e.what());
            raw.dropped_lines.push_back(line_no);
        }
    }
    if (rows.empty()) throw IoError("'" + path.string() + "': no data rows");

    raw.points.resize(static_cast<Eigen::Index>(rows.size()), dim);
    raw.observations.resize(static_cast<Eigen::Index>(rows.size()));
    for (Eigen::Index i = 0; i < raw.points.rows(); ++i) {
        raw.points.row(i) = rows[static_cast<std::size_t>(i)].transpose();
        raw.observations[i] = ys[static_cast<std::size_t>(i)];
    }
    return raw;
}

void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& points,
               const Eigen::VectorXd& observations) {
    if (points.rows() != observations.size())
        throw std::invalid_argument("write_csv: shape mismatch");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (Eigen::Index j = 0; j < points.cols(); ++j) out << 'x' << (j + 1) << ',';
    out << "y\n";
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        for (Eigen::Index j = 0; j < points.cols(); ++j)
            out << format_double(points(i, j)) << ',';
        out << format_double(observations[i]) << '\n';
    }
    if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

NormalizedDataset normalize(const RawDataset& raw) {
    if (raw.points.rows() == 0) throw std::invalid_argument("normalize: empty dataset");
    const Eigen::Index dim = raw.points.cols();
    NormalizedDataset out;
    out.transform.scale.resize(dim);
    out.transform.center.resize(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        const double lo = raw.points.col(j).minCoeff();
        const double hi = raw.points.col(j).maxCoeff();
        if (hi == lo)
            throw std::invalid_argument("normalize: coordinate " + std::to_string(j + 1) +
                                        " has zero range");
        out.transform.center[j] = 0.5 * (lo + hi);
        out.transform.scale[j] = 2.0 / (hi - lo);
    }
    out.transform.y_mean = raw.observations.mean();
    out.data.points.resize(raw.points.rows(), dim);
    for (Eigen::Index i = 0; i < raw.points.rows(); ++i)
        out.data.points.row(i) = out.transform.to_unit(raw.points.row(i));
    // clip fp residue so boundary points stay inside the box
    out.data.points = out.data.points.cwiseMax(-1.0).cwiseMin(1.0);
    out.data.observations = raw.observations.array() - out.transform.y_mean;
    return out;
}

Dataset synth_dataset(int dim, Eigen::Index n, double eta, std::uint64_t seed) {
    if (dim < 1 || n < 1) throw std::invalid_argument("synth_dataset: bad shape");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset data;
    data.points.resize(n, dim);
    data.observations.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double prod = 1.0;
        for (int j = 0; j < dim; ++j) {
            data.points(i, j) = uniform(rng);
            prod *= std::cos(data.points(i, j));
        }
        data.observations[i] = prod + eta * normal(rng);
    }
    return data;
}

RawDataset subsample(const RawDataset& raw, Eigen::Index keep, std::uint64_t seed) {
    const Eigen::Index n = raw.points.rows();
    if (keep < 1 || keep > n) throw std::invalid_argument("subsample: bad count");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    RawDataset out;
    out.points.resize(keep, raw.points.cols());
    out.observations.resize(keep);
    for (Eigen::Index i = 0; i < keep; ++i) {
        out.points.row(i) = raw.points.row(order[static_cast<std::size_t>(i)]);
        out.observations[i] = raw.observations[order[static_cast<std::size_t>(i)]];
    }
    return out;
}

}  // namespace gphmc
