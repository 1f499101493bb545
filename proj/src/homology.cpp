#include "topogen/homology.hpp"

#include "topogen/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace topogen {

namespace {

constexpr std::size_t kMaxVertices = 65534;

std::uint64_t pack_key(std::span<const std::uint32_t> v) {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < v.size(); ++i) key |= static_cast<std::uint64_t>(v[i] + 1) << (16 * i);
    return key;
}

Simplex make_simplex(std::initializer_list<std::uint32_t> v, double value) {
    Simplex s;
    std::size_t i = 0;
    for (auto x : v) s.vertices[i++] = x;
    s.dim = static_cast<std::uint8_t>(v.size() - 1);
    s.value = value;
    return s;
}

} // namespace

std::vector<Simplex> Simplex::faces() const {
    std::vector<Simplex> out;
    if (dim == 0) return out;
    out.reserve(dim + 1u);
    for (int drop = 0; drop <= dim; ++drop) {
        Simplex f;
        f.dim = static_cast<std::uint8_t>(dim - 1);
        int w = 0;
        for (int r = 0; r <= dim; ++r)
            if (r != drop) f.vertices[w++] = vertices[r];
        out.push_back(f);
    }
    return out;
}

bool filtration_less(const Simplex& a, const Simplex& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.dim != b.dim) return a.dim < b.dim;
    return std::lexicographical_compare(a.verts().begin(), a.verts().end(), b.verts().begin(), b.verts().end());
}

Filtration Filtration::from_ordered(std::vector<Simplex> simplices, std::size_t n_points, int max_dim,
                                    double r_max) {
    if (n_points > kMaxVertices)
        throw ResourceError("filtration supports at most " + std::to_string(kMaxVertices) + " points");
    Filtration f;
    f.n_points_ = n_points;
    f.max_dim_ = max_dim;
    f.r_max_ = r_max;
    f.index_.reserve(simplices.size());
    for (std::size_t i = 0; i < simplices.size(); ++i)
        f.index_.emplace_back(pack_key(simplices[i].verts()), static_cast<std::uint32_t>(i));
    std::sort(f.index_.begin(), f.index_.end());
    for (std::size_t i = 1; i < f.index_.size(); ++i)
        if (f.index_[i].first == f.index_[i - 1].first) throw InvariantError("filtration: duplicate simplex");
    f.simplices_ = std::move(simplices);
    for (std::size_t i = 0; i < f.simplices_.size(); ++i) {
        const Simplex& s = f.simplices_[i];
        if (s.dim > max_dim) throw InvariantError("filtration: simplex above max_dim");
        for (int r = 0; r < s.dim; ++r)
            if (s.vertices[r] >= s.vertices[r + 1]) throw InvariantError("filtration: vertices not increasing");
        if (s.vertices[s.dim] >= n_points) throw InvariantError("filtration: vertex index out of range");
        for (const auto& face : s.faces()) {
            auto pos = f.position(face.verts());
            if (!pos || *pos >= i || f.simplices_[*pos].value > s.value)
                throw InvariantError("filtration: face missing or ordered after its coface");
        }
    }
    return f;
}

std::optional<std::size_t> Filtration::position(std::span<const std::uint32_t> vertices) const {
    const std::uint64_t key = pack_key(vertices);
    auto it = std::lower_bound(index_.begin(), index_.end(), std::make_pair(key, std::uint32_t{0}));
    if (it == index_.end() || it->first != key) return std::nullopt;
    return it->second;
}

double diameter(const PointCloud& cloud) {
    double best = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (std::size_t j = i + 1; j < cloud.size(); ++j) {
            const auto& a = cloud.points[i];
            const auto& b = cloud.points[j];
            best = std::max(best, std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]));
        }
    return best;
}

Filtration build_vr_filtration(const PointCloud& cloud, const VrOptions& options) {
    const std::size_t n = cloud.size();
    if (n == 0) throw InputError("build_vr_filtration: empty cloud");
    if (n > kMaxVertices) throw ResourceError("build_vr_filtration: too many points");
    if (options.max_dim < 0 || options.max_dim > kMaxSimplexDim)
        throw InputError("build_vr_filtration: max_dim must be in [0, 3]");
    if (options.r_max && !(*options.r_max > 0.0)) throw InputError("build_vr_filtration: r_max must be > 0");

    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& a = cloud.points[i];
            const auto& b = cloud.points[j];
            dist[i * n + j] = dist[j * n + i] = std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
        }
    const double r_max = options.r_max ? *options.r_max : *std::max_element(dist.begin(), dist.end());
    auto d = [&](std::uint32_t i, std::uint32_t j) { return dist[i * n + j]; };
    auto within = [&](std::uint32_t i, std::uint32_t j) { return d(i, j) <= r_max; };

    std::vector<Simplex> out;
    auto push = [&](Simplex s) {
        if (out.size() >= options.simplex_cap)
            throw ResourceError("build_vr_filtration: simplex count exceeds cap of " +
                                std::to_string(options.simplex_cap));
        out.push_back(s);
    };

    // Upper neighbor lists, ascending.
    std::vector<std::vector<std::uint32_t>> up(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        push(make_simplex({i}, 0.0));
        for (std::uint32_t j = i + 1; j < n; ++j)
            if (within(i, j)) up[i].push_back(j);
    }
    if (options.max_dim >= 1)
        for (std::uint32_t i = 0; i < n; ++i)
            for (auto j : up[i]) push(make_simplex({i, j}, d(i, j)));
    if (options.max_dim >= 2)
        for (std::uint32_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < up[i].size(); ++a) {
                const auto j = up[i][a];
                for (std::size_t b = a + 1; b < up[i].size(); ++b) {
                    const auto k = up[i][b];
                    if (!within(j, k)) continue;
                    const double v = std::max({d(i, j), d(i, k), d(j, k)});
                    push(make_simplex({i, j, k}, v));
                    if (options.max_dim < 3) continue;
                    for (std::size_t c = b + 1; c < up[i].size(); ++c) {
                        const auto l = up[i][c];
                        if (!within(j, l) || !within(k, l)) continue;
                        push(make_simplex({i, j, k, l}, std::max({v, d(i, l), d(j, l), d(k, l)})));
                    }
                }
            }
    // Tetrahedra were emitted before all their triangles; the sort restores order.
    std::sort(out.begin(), out.end(), filtration_less);
    return Filtration::from_ordered(std::move(out), n, options.max_dim, r_max);
}

BoundaryMatrix boundary_matrix(const Filtration& filt) {
    BoundaryMatrix m;
    m.columns.resize(filt.size());
    for (std::size_t j = 0; j < filt.size(); ++j) {
        auto& col = m.columns[j];
        for (const auto& face : filt[j].faces()) {
            auto pos = filt.position(face.verts());
            if (!pos) throw InvariantError("boundary_matrix: face not found in filtration");
            col.push_back(static_cast<std::uint32_t>(*pos));
        }
        std::sort(col.begin(), col.end());
    }
    return m;
}

std::vector<std::uint32_t> add_mod2(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    std::vector<std::uint32_t> out;
    out.reserve(a.size() + b.size());
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

bool boundary_squares_to_zero(const BoundaryMatrix& m) {
    for (const auto& col : m.columns) {
        std::vector<std::uint32_t> acc;
        for (auto row : col) acc = add_mod2(acc, m.columns.at(row));
        if (!acc.empty()) return false;
    }
    return true;
}

Pairing reduce(BoundaryMatrix matrix, const Filtration& filt, const ReduceOptions& options) {
    auto& cols = matrix.columns;
    const std::size_t n = cols.size();
    constexpr auto kNone = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> col_of_low(n, kNone);
    std::vector<char> cleared(n, 0);
    std::vector<std::uint32_t> scratch;

    auto reduce_column = [&](std::size_t j) {
        auto& col = cols[j];
        while (!col.empty()) {
            const auto other = col_of_low[col.back()];
            if (other == kNone) break;
            scratch.clear();
            const auto& oc = cols[other];
            std::set_symmetric_difference(col.begin(), col.end(), oc.begin(), oc.end(),
                                          std::back_inserter(scratch));
            col.swap(scratch);
        }
        if (!col.empty()) {
            col_of_low[col.back()] = static_cast<std::uint32_t>(j);
            if (options.clearing) cleared[col.back()] = 1;
        }
    };

    if (options.clearing) {
        for (int dim = filt.max_dim(); dim >= 1; --dim)
            for (std::size_t j = 0; j < n; ++j) {
                if (filt[j].dim != dim) continue;
                if (cleared[j]) {
                    cols[j].clear();
                    continue;
                }
                reduce_column(j);
            }
    } else {
        for (std::size_t j = 0; j < n; ++j) reduce_column(j);
    }

    Pairing out;
    std::vector<char> paired(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
        if (cols[j].empty()) continue;
        const auto low = cols[j].back();
        out.pairs.emplace_back(low, static_cast<std::uint32_t>(j));
        paired[low] = paired[j] = 1;
    }
    for (std::size_t j = 0; j < n; ++j)
        if (!paired[j]) out.essential.push_back(static_cast<std::uint32_t>(j));
    return out;
}

std::vector<PersistenceDiagram> diagrams_from_pairing(const Filtration& filt, const Pairing& pairing) {
    const int dims = std::max(filt.max_dim(), 1);
    std::vector<PersistenceDiagram> out(static_cast<std::size_t>(dims));
    for (int k = 0; k < dims; ++k) out[k].dimension = k;
    for (auto [b, d] : pairing.pairs) {
        const int k = filt[b].dim;
        if (k >= dims) continue;
        const double birth = filt[b].value, death = filt[d].value;
        if (death > birth) out[k].pairs.push_back({birth, death});
    }
    for (auto e : pairing.essential) {
        const int k = filt[e].dim;
        if (k < dims) out[k].essential.push_back(filt[e].value);
    }
    return out;
}

std::vector<PersistenceDiagram> persistence_diagrams(const Filtration& filt, const ReduceOptions& options) {
    return diagrams_from_pairing(filt, reduce(boundary_matrix(filt), filt, options));
}

namespace {

/// Rank over Z/2 of a dense bit matrix given as rows.
std::size_t rank_mod2(std::vector<std::vector<std::uint64_t>> rows) {
    std::size_t rank = 0;
    if (rows.empty()) return 0;
    const std::size_t words = rows.front().size();
    for (std::size_t w = 0; w < words; ++w)
        for (int bit = 0; bit < 64; ++bit) {
            const std::uint64_t mask = std::uint64_t{1} << bit;
            std::size_t piv = rank;
            while (piv < rows.size() && !(rows[piv][w] & mask)) ++piv;
            if (piv == rows.size()) continue;
            std::swap(rows[piv], rows[rank]);
            for (std::size_t r = 0; r < rows.size(); ++r)
                if (r != rank && (rows[r][w] & mask))
                    for (std::size_t x = 0; x < words; ++x) rows[r][x] ^= rows[rank][x];
            ++rank;
        }
    return rank;
}

} // namespace

std::vector<std::size_t> betti_numbers(const Filtration& filt, double r) {
    const int top = filt.max_dim();
    // Local indices of each dimension's simplices in the subcomplex.
    std::vector<std::vector<std::size_t>> by_dim(static_cast<std::size_t>(top) + 1);
    std::vector<std::size_t> local(filt.size(), 0);
    for (std::size_t i = 0; i < filt.size(); ++i) {
        const auto& s = filt[i];
        if (s.value > r) continue;
        local[i] = by_dim[s.dim].size();
        by_dim[s.dim].push_back(i);
    }
    // rank_of[k] = rank of the boundary map from k-chains to (k-1)-chains.
    std::vector<std::size_t> rank_of(static_cast<std::size_t>(top) + 2, 0);
    for (int k = 1; k <= top; ++k) {
        const auto& cols = by_dim[k];
        const std::size_t nrows = by_dim[k - 1].size();
        if (cols.empty() || nrows == 0) continue;
        const std::size_t words = (nrows + 63) / 64;
        // Transposed: one bit-row per k-simplex; rank is unchanged.
        std::vector<std::vector<std::uint64_t>> rows(cols.size(), std::vector<std::uint64_t>(words, 0));
        for (std::size_t c = 0; c < cols.size(); ++c)
            for (const auto& face : filt[cols[c]].faces()) {
                auto pos = filt.position(face.verts());
                if (!pos) throw InvariantError("betti_numbers: face missing");
                const std::size_t row = local[*pos];
                rows[c][row / 64] ^= std::uint64_t{1} << (row % 64);
            }
        rank_of[k] = rank_mod2(std::move(rows));
    }
    const int dims = std::max(top, 1);
    std::vector<std::size_t> betti(static_cast<std::size_t>(dims), 0);
    for (int k = 0; k < dims; ++k) betti[k] = by_dim[k].size() - rank_of[k] - rank_of[k + 1];
    return betti;
}

std::vector<std::size_t> betti_from_diagrams(std::span<const PersistenceDiagram> diagrams, double r) {
    std::vector<std::size_t> out(diagrams.size(), 0);
    for (std::size_t k = 0; k < diagrams.size(); ++k) {
        for (const auto& p : diagrams[k].pairs)
            if (p.birth <= r && r < p.death) ++out[k];
        for (double b : diagrams[k].essential)
            if (b <= r) ++out[k];
    }
    return out;
}

namespace {

std::string fmt_real(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_diagram_csv(std::ostream& os, std::span<const PersistenceDiagram> diagrams, std::size_t n_points,
                       double r_max) {
    os << "# topogen-pd v1 n_points=" << n_points << " r_max=" << fmt_real(r_max) << '\n';
    os << "dim,birth,death\n";
    for (const auto& pd : diagrams) {
        for (const auto& p : pd.pairs)
            os << pd.dimension << ',' << fmt_real(p.birth) << ',' << fmt_real(p.death) << '\n';
        for (double b : pd.essential) os << pd.dimension << ',' << fmt_real(b) << ",inf\n";
    }
}

DiagramFile read_diagram_csv(std::istream& is) {
    DiagramFile f;
    std::string line;
    if (!std::getline(is, line) || line.rfind("# topogen-pd v1", 0) != 0)
        throw InputError("diagram file: missing '# topogen-pd v1' header");
    {
        std::istringstream hs(line.substr(15));
        std::string tok;
        bool have_n = false, have_r = false;
        while (hs >> tok) {
            if (tok.rfind("n_points=", 0) == 0) {
                f.n_points = std::stoull(tok.substr(9));
                have_n = true;
            } else if (tok.rfind("r_max=", 0) == 0) {
                f.r_max = std::stod(tok.substr(6));
                have_r = true;
            }
        }
        if (!have_n || !have_r) throw InputError("diagram file: header lacks n_points or r_max");
    }
    if (!std::getline(is, line) || line != "dim,birth,death")
        throw InputError("diagram file: expected column header 'dim,birth,death'");
    std::vector<PersistenceDiagram> by_dim;
    auto diagram_for = [&](int dim) -> PersistenceDiagram& {
        for (auto& pd : by_dim)
            if (pd.dimension == dim) return pd;
        by_dim.push_back(PersistenceDiagram{.dimension = dim, .pairs = {}, .essential = {}});
        return by_dim.back();
    };
    std::size_t lineno = 2;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, c;
        if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c))
            throw InputError("diagram file line " + std::to_string(lineno) + ": expected dim,birth,death");
        try {
            const int dim = std::stoi(a);
            const double birth = std::stod(b);
            if (dim < 0 || birth < 0.0) throw InputError("negative value");
            if (c == "inf") {
                diagram_for(dim).essential.push_back(birth);
            } else {
                const double death = std::stod(c);
                if (!(death >= birth)) throw InputError("death before birth");
                diagram_for(dim).pairs.push_back({birth, death});
            }
        } catch (const std::exception& e) {
            throw InputError("diagram file line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    std::sort(by_dim.begin(), by_dim.end(), [](const auto& x, const auto& y) { return x.dimension < y.dimension; });
    f.diagrams = std::move(by_dim);
    return f;
}

} // namespace topogen
