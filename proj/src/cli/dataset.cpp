#include "astralora/cli/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "astralora/errors.hpp"

namespace astralora::cli {

namespace {

void require_even(std::size_t n) {
    require(n >= 2 && n % 2 == 0, "dataset: n must be even and >= 2");
}

} // namespace

Dataset gen_spirals(std::size_t n, double noise, RngStream& stream) {
    require_even(n);
    const std::size_t m = n / 2;
    Dataset ds;
    ds.features = Matrix(n, 2);
    ds.labels.resize(n);
    ds.n_classes = 2;
    double jitter[2];
    for (std::size_t i = 0; i < m; ++i) {
        const double t = m == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(m - 1);
        const double r = 0.1 + 0.9 * t;
        for (int c = 0; c < 2; ++c) {
            const double th = 3.0 * M_PI * t + (c == 1 ? M_PI : 0.0);
            stream.fill_normal(jitter);
            const std::size_t row = 2 * i + static_cast<std::size_t>(c);
            ds.features(row, 0) = r * std::cos(th) + noise * jitter[0];
            ds.features(row, 1) = r * std::sin(th) + noise * jitter[1];
            ds.labels[row] = c;
        }
    }
    return ds;
}

Dataset gen_blobs(std::size_t n, double noise, RngStream& stream) {
    require_even(n);
    Dataset ds;
    ds.features = Matrix(n, 2);
    ds.labels.resize(n);
    ds.n_classes = 2;
    double jitter[2];
    for (std::size_t i = 0; i < n / 2; ++i)
        for (int c = 0; c < 2; ++c) {
            const double centre = c == 1 ? 1.0 : -1.0;
            stream.fill_normal(jitter);
            const std::size_t row = 2 * i + static_cast<std::size_t>(c);
            ds.features(row, 0) = centre + noise * jitter[0];
            ds.features(row, 1) = centre + noise * jitter[1];
            ds.labels[row] = c;
        }
    return ds;
}

Dataset gen_xor_grid(std::size_t n, double noise, RngStream& stream) {
    require_even(n);
    Dataset ds;
    ds.features = Matrix(n, 2);
    ds.labels.resize(n);
    ds.n_classes = 2;
    std::size_t count[2] = {0, 0};
    const std::size_t cap = n / 2;
    std::size_t row = 0;
    double jitter[2];
    while (row < n) {
        const double x = stream.uniform(-1.0, 1.0);
        const double y = stream.uniform(-1.0, 1.0);
        const int label = ((x > 0.0) != (y > 0.0)) ? 1 : 0;
        if (count[label] == cap) continue; // rejection keeps classes balanced
        stream.fill_normal(jitter);
        ds.features(row, 0) = x + noise * jitter[0];
        ds.features(row, 1) = y + noise * jitter[1];
        ds.labels[row] = label;
        ++count[label];
        ++row;
    }
    return ds;
}

Dataset gen_dataset(const std::string& kind, std::size_t n, double noise,
                    RngStream& stream) {
    if (kind == "spirals") return gen_spirals(n, noise, stream);
    if (kind == "blobs") return gen_blobs(n, noise, stream);
    if (kind == "xor-grid") return gen_xor_grid(n, noise, stream);
    throw ConfigError("data.kind: unknown dataset kind '" + kind + "'");
}

void save_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "label";
    for (std::size_t j = 1; j <= ds.dim(); ++j) os << ",f" << j;
    os << '\n';
    char buf[40];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        os << ds.labels[i];
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, j));
            os << ',' << buf;
        }
        os << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw IoError(path + ": empty file");
    // header: label,f1,...,fd
    std::size_t dim = 0;
    {
        std::stringstream ss(line);
        std::string field;
        if (!std::getline(ss, field, ',') || field != "label")
            throw IoError(path + ": line 1: header must start with 'label'");
        while (std::getline(ss, field, ',')) ++dim;
        if (dim == 0) throw IoError(path + ": line 1: no feature columns");
    }
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::size_t got = 0;
        while (std::getline(ss, field, ',')) {
            std::size_t pos = 0;
            double v;
            try {
                v = std::stod(field, &pos);
            } catch (const std::exception&) {
                throw IoError(path + ": line " + std::to_string(lineno) +
                              ": not a number: '" + field + "'");
            }
            if (pos != field.size())
                throw IoError(path + ": line " + std::to_string(lineno) +
                              ": trailing junk in '" + field + "'");
            if (got == 0) {
                const int lab = static_cast<int>(v);
                if (static_cast<double>(lab) != v || lab < 0)
                    throw IoError(path + ": line " + std::to_string(lineno) +
                                  ": label must be a non-negative integer");
                labels.push_back(lab);
            } else {
                values.push_back(v);
            }
            ++got;
        }
        if (got != dim + 1)
            throw IoError(path + ": line " + std::to_string(lineno) + ": expected " +
                          std::to_string(dim + 1) + " fields, got " + std::to_string(got));
    }
    if (labels.empty()) throw IoError(path + ": no data rows");

    Dataset ds;
    ds.features = Matrix(labels.size(), dim);
    ds.features.storage() = std::move(values);
    ds.labels = std::move(labels);
    int mx = 0;
    for (int l : ds.labels) mx = std::max(mx, l);
    ds.n_classes = static_cast<std::size_t>(mx) + 1;
    return ds;
}

Split split_dataset(const Dataset& ds, double test_fraction, RngStream& stream) {
    require(test_fraction >= 0.0 && test_fraction < 1.0,
            "split: test_fraction must lie in [0, 1)");
    const std::size_t n = ds.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(stream.index(i));
        std::swap(idx[i - 1], idx[j]);
    }
    const std::size_t n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(n)));
    require(n_test < n, "split: test set swallows everything");

    auto take = [&](std::size_t from, std::size_t count) {
        Dataset out;
        out.features = Matrix(count, ds.dim());
        out.labels.resize(count);
        out.n_classes = ds.n_classes;
        for (std::size_t i = 0; i < count; ++i) {
            out.features.set_row(i, ds.features.row(idx[from + i]));
            out.labels[i] = ds.labels[idx[from + i]];
        }
        return out;
    };
    return {take(n_test, n - n_test), take(0, n_test)};
}

} // namespace astralora::cli
