#include "astralora/photonics/models.hpp"

#include <cmath>

#include "astralora/errors.hpp"

namespace astralora::photonics {

double mrr_response(double w, double a, double r) {
    const double c = 2.0 * a * r * std::cos(w);
    const double t = (a * a + r * r - c) / (1.0 + a * a * r * r - c);
    return 2.0 * std::sqrt(t) - 1.0;
}

Matrix slm_matrix(std::span<const double> w, std::size_t d_out, std::size_t d_inp) {
    require(w.size() == d_out * d_inp, "slm_matrix: parameter count mismatch");
    Matrix a(d_out, d_inp);
    const double inv = 1.0 / std::sqrt(static_cast<double>(d_inp));
    for (std::size_t i = 0; i < w.size(); ++i) a.storage()[i] = std::cos(w[i]) * inv;
    return a;
}

bool is_pow2(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

MonarchShape MonarchShape::from_dims(std::size_t d_inp, std::size_t d_out) {
    require(is_pow2(d_inp) && is_pow2(d_out),
            "monarch dimensions must be powers of two");
    auto split = [](std::size_t d, std::size_t& b, std::size_t& n) {
        std::size_t log2d = 0;
        while ((std::size_t{1} << (log2d + 1)) <= d) ++log2d;
        b = std::size_t{1} << (log2d / 2);
        n = d / b;
    };
    MonarchShape s;
    s.d_inp = d_inp;
    s.d_out = d_out;
    split(d_inp, s.b_inp, s.n_inp);
    split(d_out, s.b_out, s.n_out);
    return s;
}

Matrix monarch_matrix(const MonarchShape& shape, std::span<const double> w) {
    require(w.size() == shape.param_count(), "monarch_matrix: parameter count mismatch");
    const std::size_t bi = shape.b_inp, ni = shape.n_inp;
    const std::size_t bo = shape.b_out, no = shape.n_out;
    std::span<const double> wr = w.first(shape.right_params());
    std::span<const double> wl = w.subspan(shape.right_params());
    const double inv_r = 1.0 / std::sqrt(static_cast<double>(bi));
    const double inv_l = 1.0 / std::sqrt(static_cast<double>(ni));

    Matrix out(shape.d_out, shape.d_inp);
    std::vector<std::complex<double>> mid(ni * no), midt(no * ni);
    for (std::size_t col = 0; col < shape.d_inp; ++col) {
        // basis input e_col lives in block i at offset k
        const std::size_t i = col / bi;
        const std::size_t k = col % bi;
        // right stage: block i (n_out x b_inp), row-major phases
        std::fill(mid.begin(), mid.end(), std::complex<double>{});
        const double* wri = wr.data() + i * (no * bi);
        for (std::size_t l = 0; l < no; ++l)
            mid[i * no + l] = std::polar(inv_r, wri[l * bi + k]);
        // transpose rewiring: (i, l) -> (l, i)
        for (std::size_t ii = 0; ii < ni; ++ii)
            for (std::size_t l = 0; l < no; ++l) midt[l * ni + ii] = mid[ii * no + l];
        // left stage: block l (b_out x n_inp)
        for (std::size_t l = 0; l < no; ++l) {
            const double* wll = wl.data() + l * (bo * ni);
            for (std::size_t j = 0; j < bo; ++j) {
                std::complex<double> acc{};
                for (std::size_t ii = 0; ii < ni; ++ii)
                    acc += std::polar(inv_l, wll[j * ni + ii]) * midt[l * ni + ii];
                out(l * bo + j, col) = acc.real();
            }
        }
    }
    return out;
}

CMatrix mesh_cell(MeshCell kind, double theta, double phi) {
    CMatrix b(2, 2);
    if (kind == MeshCell::mzi) {
        const std::complex<double> pre = std::polar(1.0, theta / 2.0);
        const std::complex<double> ph = std::polar(1.0, phi);
        const double sn = std::sin(theta / 2.0);
        const double cs = std::cos(theta / 2.0);
        b(0, 0) = pre * ph * sn;
        b(0, 1) = pre * cs;
        b(1, 0) = pre * ph * cs;
        b(1, 1) = -pre * sn;
    } else {
        const std::complex<double> pre =
            std::polar(1.0 / std::sqrt(2.0), (phi + theta) / 2.0);
        const double cm = std::cos((theta - phi) / 2.0);
        const double sm = std::sin((theta - phi) / 2.0);
        const double cp = std::cos((theta + phi) / 2.0);
        const double sp = std::sin((theta + phi) / 2.0);
        b(0, 0) = pre * std::complex<double>(-cm, sp);
        b(0, 1) = pre * std::complex<double>(-sm, cp);
        b(1, 0) = pre * std::complex<double>(sm, cp);
        b(1, 1) = pre * std::complex<double>(-cm, -sp);
    }
    return b;
}

MeshLayout MeshLayout::clements(std::size_t n_modes) {
    require(n_modes >= 1, "clements: need at least one mode");
    MeshLayout layout;
    layout.n_modes = n_modes;
    for (std::size_t layer = 0; layer < n_modes; ++layer)
        for (std::size_t top = layer % 2; top + 1 < n_modes; top += 2)
            layout.cells.emplace_back(layer, top);
    return layout;
}

void mesh_apply(const MeshLayout& layout, MeshCell kind, std::span<const double> w,
                std::span<std::complex<double>> amps) {
    require(w.size() == layout.param_count(), "mesh_apply: parameter count mismatch");
    require(amps.size() == layout.n_modes, "mesh_apply: mode count mismatch");
    for (std::size_t c = 0; c < layout.cells.size(); ++c) {
        const std::size_t top = layout.cells[c].second;
        const CMatrix b = mesh_cell(kind, w[2 * c], w[2 * c + 1]);
        const std::complex<double> a0 = amps[top];
        const std::complex<double> a1 = amps[top + 1];
        amps[top] = b(0, 0) * a0 + b(0, 1) * a1;
        amps[top + 1] = b(1, 0) * a0 + b(1, 1) * a1;
    }
    const std::size_t phase_off = 2 * layout.cells.size();
    for (std::size_t m = 0; m < layout.n_modes; ++m)
        amps[m] *= std::polar(1.0, w[phase_off + m]);
}

CMatrix mesh_matrix(const MeshLayout& layout, MeshCell kind, std::span<const double> w) {
    const std::size_t n = layout.n_modes;
    CMatrix t(n, n);
    std::vector<std::complex<double>> amps(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(amps.begin(), amps.end(), std::complex<double>{});
        amps[j] = 1.0;
        mesh_apply(layout, kind, w, amps);
        for (std::size_t i = 0; i < n; ++i) t(i, j) = amps[i];
    }
    return t;
}

} // namespace astralora::photonics
