#include "topogen/training.hpp"

#include "topogen/error.hpp"

#include <algorithm>
#include <numeric>

namespace topogen {

using ad::Tensor;

PointCloud subsample(const PointCloud& cloud, std::size_t k, Rng& rng) {
    if (k == 0 || k >= cloud.size()) return cloud;
    std::vector<std::size_t> idx(cloud.size());
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates; the kept indices are then restored to input order.
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                                static_cast<std::int64_t>(idx.size() - 1)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    PointCloud out = select(cloud, idx);
    out.id = cloud.id;
    return out;
}

std::vector<double> train_diffusion(TopoDiT& model, std::span<const PointCloud> clouds, std::span<const PiPair> pis,
                                    const NoiseSchedule& sched, const DiffusionTrainOptions& opts,
                                    const StepCallback& on_step) {
    if (clouds.empty()) throw InputError("training needs at least one cloud");
    if (pis.size() != clouds.size())
        throw InputError("training needs one persistence-image pair per cloud (" + std::to_string(clouds.size()) +
                         " clouds, " + std::to_string(pis.size()) + " pairs)");
    if (opts.batch == 0) throw InputError("batch size must be positive");
    const Rng root(opts.seed);
    Rng order = root.split("train.order");
    std::vector<std::size_t> perm(clouds.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t cursor = perm.size();
    std::vector<double> losses;
    losses.reserve(opts.steps);
    for (std::size_t step = 0; step < opts.steps; ++step) {
        model.params().zero_grad();
        Rng rng = root.split("train.step", step);
        double total = 0.0;
        for (std::size_t b = 0; b < opts.batch; ++b) {
            if (cursor == perm.size()) {
                std::shuffle(perm.begin(), perm.end(), order.engine());
                cursor = 0;
            }
            const std::size_t i = perm[cursor++];
            const PointCloud x0 = subsample(clouds[i], opts.points, rng);
            Tensor loss = training_loss(model, x0.points, pis[i].pi1, pis[i].pi2, sched, rng);
            ad::scale(loss, 1.0 / static_cast<double>(opts.batch)).backward();
            total += loss.item();
        }
        ad::adam_step(model.params(), opts.lr);
        losses.push_back(total / static_cast<double>(opts.batch));
        if (on_step) on_step(step, losses.back());
    }
    return losses;
}

std::vector<double> train_vae(PiVae& vae, const Tensor& rows, const VaeTrainOptions& opts, const StepCallback& on_step) {
    if (rows.rank() != 2 || rows.dim(0) == 0) throw InputError("VAE training needs a non-empty [count, 2n^2] set");
    if (opts.batch == 0) throw InputError("batch size must be positive");
    const std::size_t count = rows.dim(0), width = rows.dim(1);
    const std::size_t batch = std::min(opts.batch, count);
    const Rng root(opts.seed);
    Rng order = root.split("vae.order");
    std::vector<std::size_t> perm(count);
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t cursor = count;
    std::vector<double> losses;
    losses.reserve(opts.steps);
    for (std::size_t step = 0; step < opts.steps; ++step) {
        std::vector<double> data;
        data.reserve(batch * width);
        for (std::size_t b = 0; b < batch; ++b) {
            if (cursor == count) {
                std::shuffle(perm.begin(), perm.end(), order.engine());
                cursor = 0;
            }
            const auto r = perm[cursor++];
            data.insert(data.end(), rows.data().begin() + static_cast<std::ptrdiff_t>(r * width),
                        rows.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * width));
        }
        Rng rng = root.split("vae.step", step);
        vae.params().zero_grad();
        VaeLoss l = vae.loss(Tensor::from({batch, width}, std::move(data)), rng);
        l.total.backward();
        ad::adam_step(vae.params(), opts.lr);
        losses.push_back(l.total.item());
        if (on_step) on_step(step, losses.back());
    }
    return losses;
}

double moving_average(std::span<const double> values, std::size_t end, std::size_t window) {
    if (values.empty() || end >= values.size() || window == 0) throw InputError("moving average out of range");
    const std::size_t begin = end + 1 >= window ? end + 1 - window : 0;
    double s = 0.0;
    for (std::size_t i = begin; i <= end; ++i) s += values[i];
    return s / static_cast<double>(end + 1 - begin);
}

} // namespace topogen
