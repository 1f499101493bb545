#include "topogen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace topogen {

Extraction extract_diagrams(const PointCloud& cloud, const ExtractOptions& opts) {
    const std::size_t k = std::min(opts.n_pd, cloud.size());
    const auto idx = farthest_point_sample(cloud, k, opts.fps_seed);
    VrOptions vr;
    vr.max_dim = opts.max_dim;
    vr.simplex_cap = opts.simplex_cap;
    const Filtration filt = build_vr_filtration(select(cloud, idx), vr);
    return {persistence_diagrams(filt, ReduceOptions{.clearing = true}), k, filt.r_max()};
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; !failed && (i = next++) < count;) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!error) error = std::current_exception();
                    failed = true;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<Extraction> extract_all(std::span<const PointCloud> clouds, const ExtractOptions& opts,
                                    std::size_t threads) {
    std::vector<Extraction> out(clouds.size());
    parallel_for(clouds.size(), threads, [&](std::size_t i) { out[i] = extract_diagrams(clouds[i], opts); });
    return out;
}

PersistenceDiagram diagram_of(std::span<const PersistenceDiagram> diagrams, int dim) {
    for (const auto& d : diagrams)
        if (d.dimension == dim) return d;
    PersistenceDiagram empty;
    empty.dimension = dim;
    return empty;
}

ImageSet rasterize_all(std::span<const std::vector<PersistenceDiagram>> diagrams, int n, SigmaPolicy sigma) {
    ImageSet out;
    for (int dim : {1, 2}) {
        std::vector<PersistenceDiagram> column;
        column.reserve(diagrams.size());
        for (const auto& per_cloud : diagrams) column.push_back(diagram_of(per_cloud, dim));
        const GridSpec spec = dataset_spec(column, n, sigma).spec;
        auto& images = dim == 1 ? out.pi1 : out.pi2;
        (dim == 1 ? out.spec1 : out.spec2) = spec;
        for (const auto& pd : column) {
            images.push_back(rasterize(pd, spec));
            images.back().dim_tag = dim;
        }
    }
    return out;
}

} // namespace topogen

namespace topogen {

ImageSet rasterize_all(std::span<const Extraction> extractions, int n, SigmaPolicy sigma) {
    std::vector<std::vector<PersistenceDiagram>> diagrams;
    diagrams.reserve(extractions.size());
    for (const auto& e : extractions) diagrams.push_back(e.diagrams);
    return rasterize_all(diagrams, n, sigma);
}

} // namespace topogen
