#include "topogen/commands.hpp"

#include "topogen/diffusion.hpp"
#include "topogen/error.hpp"
#include "topogen/io.hpp"
#include "topogen/metrics.hpp"
#include "topogen/pipeline.hpp"
#include "topogen/synthetic.hpp"
#include "topogen/tensor.hpp"
#include "topogen/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace topogen::cli {

using ad::Tensor;
using namespace io;

namespace {

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw InputError("cannot open " + path.string());
    return in;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

void require_dir(const fs::path& dir, const char* what) {
    if (!fs::is_directory(dir)) throw InputError(std::string(what) + " is not a directory: " + dir.string());
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::string fmt(double v, int digits = 17) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

template <typename F>
void write_text(const fs::path& path, F&& body) {
    std::ostringstream os;
    body(os);
    write_file(path, os.str());
}

std::size_t steps_for(std::size_t steps, std::size_t epochs, std::size_t count, std::size_t batch) {
    if (steps > 0) return steps;
    if (batch == 0) throw InputError("batch size must be positive");
    return epochs * ((count + batch - 1) / batch);
}

void write_loss_log(const fs::path& path, const std::vector<double>& losses) {
    write_text(path, [&](std::ostream& os) {
        os << "step,loss\n";
        for (std::size_t i = 0; i < losses.size(); ++i) os << i << ',' << fmt(losses[i]) << '\n';
    });
}

fs::path sidecar(const fs::path& checkpoint) { return fs::path(checkpoint.string() + ".cfg"); }

} // namespace

// ---- manifests ---------------------------------------------------------------

std::vector<ManifestRow> read_manifest(const fs::path& manifest) {
    auto in = open_in(manifest);
    std::string line;
    if (!std::getline(in, line) || line != kManifestHeader)
        throw InputError(manifest.string() + ": expected header '" + kManifestHeader + "'");
    std::vector<ManifestRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 4) throw InputError(manifest.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
        ManifestRow r{f[0], f[1], 0, f[3]};
        try {
            r.n_points = std::stoull(f[2]);
        } catch (const std::exception&) {
            throw InputError(manifest.string() + ":" + std::to_string(lineno) + ": bad n_points '" + f[2] + "'");
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw InputError(manifest.string() + ": manifest lists no clouds");
    return rows;
}

void write_manifest(const fs::path& manifest, const std::vector<ManifestRow>& rows) {
    write_text(manifest, [&](std::ostream& os) {
        os << kManifestHeader << '\n';
        for (const auto& r : rows) os << r.id << ',' << r.path << ',' << r.n_points << ',' << r.hash << '\n';
    });
}

std::vector<PointCloud> load_manifest_clouds(const fs::path& manifest) {
    const fs::path base = manifest.parent_path();
    std::vector<PointCloud> clouds;
    for (const auto& r : read_manifest(manifest)) {
        const fs::path p = base / r.path;
        const std::string bytes = read_file(p);
        if (content_hash(bytes) != r.hash) throw InputError("stale manifest entry for '" + r.id + "': hash mismatch");
        PointCloud c = load_cloud(p);
        if (c.size() != r.n_points) throw InputError("manifest entry '" + r.id + "': point count mismatch");
        c.id = r.id;
        clouds.push_back(std::move(c));
    }
    return clouds;
}

std::vector<PointCloud> load_cloud_dir(const fs::path& dir) {
    require_dir(dir, "cloud directory");
    std::vector<PointCloud> clouds;
    for (const auto& p : sorted_files(dir)) {
        const auto ext = p.extension();
        if (ext != ".xyz" && ext != ".tpc") continue;
        PointCloud c = load_cloud(p);
        c.id = p.stem().string();
        clouds.push_back(std::move(c));
    }
    if (clouds.empty()) throw InputError("no .xyz or .tpc clouds in " + dir.string());
    return clouds;
}

void write_norm_stats(const fs::path& path, const NormStats& s) {
    write_text(path, [&](std::ostream& os) {
        os << "mean_x = " << fmt(s.mean[0]) << "\nmean_y = " << fmt(s.mean[1]) << "\nmean_z = " << fmt(s.mean[2])
           << "\nscale = " << fmt(s.scale) << '\n';
    });
}

NormStats read_norm_stats(const fs::path& path) {
    auto in = open_in(path);
    NormStats s;
    std::map<std::string, double> kv;
    std::string key, eq;
    double v = 0.0;
    while (in >> key >> eq >> v) kv[key] = v;
    for (const char* k : {"mean_x", "mean_y", "mean_z", "scale"})
        if (!kv.count(k)) throw InputError(path.string() + ": missing " + k);
    s.mean = {kv["mean_x"], kv["mean_y"], kv["mean_z"]};
    s.scale = kv["scale"];
    return s;
}

// ---- data preparation --------------------------------------------------------

void cmd_gen_synthetic(const SyntheticArgs& a, std::ostream& log) {
    if (a.count == 0 || a.points == 0) throw InputError("gen-synthetic: count and points must be positive");
    ensure_dir(a.out_dir);
    const auto clouds = synthetic::mixed_dataset(a.count, a.points, a.noise, a.seed, a.two_hole);
    for (const auto& c : clouds) save_cloud(a.out_dir / (c.id + ".xyz"), c);
    log << "wrote " << clouds.size() << " clouds to " << a.out_dir.string() << '\n';
}

void cmd_preprocess(const PreprocessArgs& a, std::ostream& log) {
    std::vector<PointCloud> clouds = load_cloud_dir(a.in_dir);
    const Rng root(a.seed);
    for (auto& c : clouds) {
        if (a.points > 0 && c.size() < a.points)
            log << "warning: " << c.id << " has " << c.size() << " points, fewer than " << a.points << '\n';
        Rng rng = root.split("preprocess." + c.id);
        c = subsample(c, a.points, rng);
    }
    Normalized norm = normalize(clouds);
    ensure_dir(a.out_dir / "clouds");
    std::vector<ManifestRow> rows;
    for (const auto& c : norm.clouds) {
        const std::string rel = "clouds/" + c.id + ".tpc";
        std::ostringstream os;
        write_tpc(os, c);
        const std::string bytes = os.str();
        write_file(a.out_dir / rel, bytes);
        rows.push_back({c.id, rel, c.size(), content_hash(bytes)});
    }
    write_manifest(a.out_dir / "manifest.csv", rows);
    write_norm_stats(a.out_dir / "norm.txt", norm.stats);
    log << "preprocessed " << rows.size() << " clouds (scale " << fmt(norm.stats.scale, 6) << ")\n";
}

void cmd_extract(const ExtractArgs& a, std::ostream& log) {
    if (a.n_pd == 0) throw InputError("extract: --n-pd must be positive");
    if (a.max_dim < 1 || a.max_dim > 3) throw InputError("extract: --max-dim must be in 1..3");
    const auto clouds = load_manifest_clouds(a.manifest);
    ExtractOptions opts;
    opts.n_pd = a.n_pd;
    opts.max_dim = a.max_dim;
    opts.fps_seed = a.seed;
    opts.simplex_cap = a.simplex_cap;
    const auto results = extract_all(clouds, opts, a.threads);
    ensure_dir(a.out_dir);
    std::vector<double> b_max(static_cast<std::size_t>(a.max_dim), 0.0);
    std::vector<std::size_t> pairs(b_max.size(), 0);
    for (std::size_t i = 0; i < clouds.size(); ++i) {
        const Extraction& e = results[i];
        for (int k = 0; k < a.max_dim; ++k) {
            const PersistenceDiagram pd = diagram_of(e.diagrams, k);
            for (const auto& p : pd.pairs) b_max[k] = std::max(b_max[k], p.persistence());
            pairs[k] += pd.pairs.size();
            write_text(a.out_dir / (clouds[i].id + "_pd" + std::to_string(k) + ".csv"), [&](std::ostream& os) {
                write_diagram_csv(os, std::span<const PersistenceDiagram>(&pd, 1), e.n_points, e.r_max);
            });
        }
    }
    write_text(a.out_dir / "summary.csv", [&](std::ostream& os) {
        os << "dim,pairs,b_max\n";
        for (std::size_t k = 0; k < b_max.size(); ++k) os << k << ',' << pairs[k] << ',' << fmt(b_max[k]) << '\n';
    });
    log << "extracted diagrams for " << clouds.size() << " clouds\n";
}

void cmd_rasterize(const RasterizeArgs& a, std::ostream& log) {
    require_dir(a.pd_dir, "diagram directory");
    // <id>_pd<k>.csv, grouped by id
    std::map<std::string, std::map<int, fs::path>> files;
    for (const auto& p : sorted_files(a.pd_dir)) {
        if (p.extension() != ".csv") continue;
        const std::string stem = p.stem().string();
        const auto cut = stem.rfind("_pd");
        if (cut == std::string::npos || cut + 3 >= stem.size()) continue;
        const std::string dim = stem.substr(cut + 3);
        if (!std::all_of(dim.begin(), dim.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
        files[stem.substr(0, cut)][std::stoi(dim)] = p;
    }
    if (files.empty()) throw InputError("no <id>_pd<k>.csv files in " + a.pd_dir.string());
    std::vector<std::string> ids;
    std::vector<std::vector<PersistenceDiagram>> diagrams;
    for (const auto& [id, by_dim] : files) {
        std::vector<PersistenceDiagram> list;
        for (int k : {1, 2}) {
            PersistenceDiagram pd;
            pd.dimension = k;
            if (auto it = by_dim.find(k); it != by_dim.end()) {
                auto in = open_in(it->second);
                pd = diagram_of(read_diagram_csv(in).diagrams, k);
            }
            list.push_back(std::move(pd));
        }
        ids.push_back(id);
        diagrams.push_back(std::move(list));
    }
    const ImageSet set = rasterize_all(diagrams, a.n, SigmaPolicy::fixed(a.sigma));
    ensure_dir(a.out_dir);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        write_text(a.out_dir / (ids[i] + "_pi1.tpi"), [&](std::ostream& os) { write_tpi(os, set.pi1[i]); });
        write_text(a.out_dir / (ids[i] + "_pi2.tpi"), [&](std::ostream& os) { write_tpi(os, set.pi2[i]); });
    }
    write_text(a.out_dir / "spec.txt", [&](std::ostream& os) {
        for (const auto& [tag, s] : {std::pair{1, set.spec1}, std::pair{2, set.spec2}})
            os << "pi" << tag << " n=" << s.n << " sigma=" << fmt(s.sigma) << " b_max=" << fmt(s.b_max)
               << " birth=[" << fmt(s.birth_lo) << ',' << fmt(s.birth_hi) << "] pers=[" << fmt(s.pers_lo) << ','
               << fmt(s.pers_hi) << "]\n";
    });
    log << "rasterized " << ids.size() << " image pairs at " << a.n << 'x' << a.n << '\n';
}

std::vector<PiEntry> load_pi_dir(const fs::path& dir) {
    require_dir(dir, "image directory");
    std::vector<PiEntry> out;
    for (const auto& p : sorted_files(dir)) {
        const std::string name = p.filename().string();
        const std::string suffix = "_pi1.tpi";
        if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        PiEntry e;
        e.id = name.substr(0, name.size() - suffix.size());
        const fs::path p2 = dir / (e.id + "_pi2.tpi");
        if (!fs::exists(p2)) throw InputError("missing " + p2.string());
        auto in1 = open_in(p, std::ios::binary);
        auto in2 = open_in(p2, std::ios::binary);
        e.pi1 = read_tpi(in1);
        e.pi2 = read_tpi(in2);
        if (e.pi1.spec.n != e.pi2.spec.n) throw InputError("image pair '" + e.id + "' has mismatched sizes");
        if (!out.empty() && e.pi1.spec.n != out.front().pi1.spec.n)
            throw InputError("images in " + dir.string() + " have mixed sizes");
        out.push_back(std::move(e));
    }
    if (out.empty()) throw InputError("no <id>_pi1.tpi files in " + dir.string());
    return out;
}

// ---- training ----------------------------------------------------------------

void cmd_train_vae(const TrainVaeArgs& a, std::ostream& log) {
    const auto pis = load_pi_dir(a.pi_dir);
    std::vector<Tensor> rows;
    for (const auto& e : pis) rows.push_back(pair_row(e.pi1, e.pi2));
    const Tensor data = ad::concat(rows, 0);
    VaeConfig cfg;
    cfg.pi_n = pis.front().pi1.spec.n;
    cfg.latent_dim = a.latent;
    cfg.kl_weight = a.kl_weight;
    cfg.pixel_scale = pixel_scale_for(data);
    cfg.validate();
    PiVae vae(cfg, a.seed);
    VaeTrainOptions opts;
    opts.steps = steps_for(a.steps, a.epochs, pis.size(), a.batch);
    opts.batch = a.batch;
    opts.lr = a.lr;
    opts.seed = a.seed;
    const auto losses = train_vae(vae, data, opts, [&](std::size_t step, double loss) {
        if (step % 100 == 0) log << "vae step " << step << " loss " << fmt(loss, 6) << '\n';
    });
    write_text(a.out, [&](std::ostream& os) { ad::save_checkpoint(os, vae.params()); });
    write_text(sidecar(a.out), [&](std::ostream& os) { write_vae_config(os, cfg); });
    if (a.log_csv) write_loss_log(*a.log_csv, losses);
    log << "vae trained " << losses.size() << " steps, loss " << fmt(losses.front(), 6) << " -> "
        << fmt(losses.back(), 6) << '\n';
}

ModelConfig resolve_model_config(const TrainArgs& a) {
    ModelConfig cfg;
    if (a.config) {
        auto in = open_in(*a.config);
        cfg = parse_model_config(in);
    }
    if (a.size) cfg.apply_preset(parse_preset(*a.size));
    if (a.voxel) cfg.V = *a.voxel;
    if (a.patch) cfg.p = *a.patch;
    if (a.queries) cfg.M_down = *a.queries;
    if (a.no_topology) cfg.use_topology = false;
    cfg.validate();
    return cfg;
}

void cmd_train(const TrainArgs& a, std::ostream& log) {
    ModelConfig cfg = resolve_model_config(a);
    const auto clouds = load_manifest_clouds(a.manifest);
    std::vector<PiPair> pairs;
    if (cfg.use_topology) {
        std::map<std::string, PiEntry> by_id;
        for (auto& e : load_pi_dir(a.pi_dir)) by_id.emplace(e.id, std::move(e));
        cfg.pi_n = by_id.begin()->second.pi1.spec.n;
        for (const auto& c : clouds) {
            auto it = by_id.find(c.id);
            if (it == by_id.end()) throw InputError("no persistence images for cloud '" + c.id + "'");
            pairs.push_back({image_tensor(it->second.pi1), image_tensor(it->second.pi2)});
        }
    } else {
        pairs.resize(clouds.size());
    }
    cfg.validate();
    TopoDiT model(cfg, a.seed);
    DiffusionTrainOptions opts;
    opts.steps = steps_for(a.steps, a.epochs, clouds.size(), a.batch);
    opts.batch = a.batch;
    opts.lr = a.lr;
    opts.seed = a.seed;
    opts.points = a.points;
    const NoiseSchedule sched = linear_schedule(cfg.timesteps);
    const auto losses = train_diffusion(model, clouds, pairs, sched, opts, [&](std::size_t step, double loss) {
        if (step % 50 == 0) log << "step " << step << " loss " << fmt(loss, 6) << '\n';
    });
    write_text(a.out, [&](std::ostream& os) { ad::save_checkpoint(os, model.params()); });
    write_text(sidecar(a.out), [&](std::ostream& os) { write_model_config(os, cfg); });
    if (a.log_csv) write_loss_log(*a.log_csv, losses);
    log << "trained " << losses.size() << " steps, loss " << fmt(losses.front(), 6) << " -> "
        << fmt(losses.back(), 6) << '\n';
}

// ---- sampling and evaluation ----------------------------------------------------

void cmd_sample(const SampleArgs& a, std::ostream& log) {
    if (a.count == 0 || a.points == 0) throw InputError("sample: count and points must be positive");
    const int sources = int(a.vae.has_value()) + int(a.pi_dir.has_value()) + int(a.zero_pi);
    if (sources > 1) throw InputError("sample: choose one of --vae, --pi-dir, --zero-pi");

    ModelConfig cfg;
    {
        auto in = open_in(sidecar(a.model));
        cfg = parse_model_config(in);
    }
    TopoDiT model(cfg, 0);
    {
        auto in = open_in(a.model, std::ios::binary);
        ad::load_checkpoint(in, model.params());
    }
    if (cfg.use_topology && sources == 0) throw InputError("sample: model uses topology; pass --vae, --pi-dir or --zero-pi");

    std::optional<PiVae> vae;
    if (a.vae) {
        auto cin = open_in(sidecar(*a.vae));
        vae.emplace(parse_vae_config(cin), 0);
        auto in = open_in(*a.vae, std::ios::binary);
        ad::load_checkpoint(in, vae->params());
        if (vae->config().pi_n != cfg.pi_n) throw InputError("sample: VAE image size differs from the model's");
    }
    std::vector<PiEntry> bank;
    if (a.pi_dir) {
        bank = load_pi_dir(*a.pi_dir);
        if (bank.front().pi1.spec.n != cfg.pi_n) throw InputError("sample: image size differs from the model's");
    }

    SampleOptions opts;
    opts.steps = a.steps;
    opts.mode = parse_sigma_mode(a.sigma_mode);
    if (a.clip > 0) opts.clip_x0 = a.clip;
    else opts.clip_x0.reset();

    const NoiseSchedule sched = linear_schedule(cfg.timesteps);
    const Rng root(a.seed);
    const std::size_t n2 = static_cast<std::size_t>(cfg.pi_n) * cfg.pi_n;
    ensure_dir(a.out_dir);
    for (std::size_t i = 0; i < a.count; ++i) {
        Tensor pi1, pi2;
        if (vae) {
            Rng r = root.split("sample.pi", i);
            std::tie(pi1, pi2) = vae->sample_prior(r);
        } else if (!bank.empty()) {
            const auto& e = bank[i % bank.size()];
            pi1 = image_tensor(e.pi1);
            pi2 = image_tensor(e.pi2);
        } else {
            pi1 = Tensor::zeros({n2});
            pi2 = Tensor::zeros({n2});
        }
        opts.seed = root.split("sample.chain", i).seed();
        PointCloud c = sample(model, sched, pi1, pi2, a.points, opts);
        char name[32];
        std::snprintf(name, sizeof name, "sample_%03zu", i);
        c.id = name;
        save_cloud(a.out_dir / (c.id + ".xyz"), c);
        log << "sampled " << c.id << '\n';
    }
}

std::vector<MetricRow> cmd_eval(const EvalArgs& a, std::ostream& log) {
    std::vector<PointCloud> gen = load_cloud_dir(a.gen);
    std::vector<PointCloud> ref =
        fs::is_directory(a.ref) ? load_cloud_dir(a.ref) : load_manifest_clouds(a.ref);
    // One common size so EMD is defined for every pair.
    std::size_t k = a.points == 0 ? SIZE_MAX : a.points;
    for (const auto* set : {&gen, &ref})
        for (const auto& c : *set) k = std::min(k, c.size());
    const Rng root(a.seed);
    for (auto& c : gen) {
        Rng r = root.split("eval.gen." + c.id);
        c = subsample(c, k, r);
    }
    for (auto& c : ref) {
        Rng r = root.split("eval.ref." + c.id);
        c = subsample(c, k, r);
    }
    std::vector<MetricRow> rows;
    for (const auto& name : a.distances) {
        Distance d;
        if (name == "CD") d = Distance::CD;
        else if (name == "EMD") d = Distance::EMD;
        else throw InputError("eval: unknown distance '" + name + "' (CD or EMD)");
        const CloudDistance dist = [d](const PointCloud& x, const PointCloud& y) { return cloud_distance(d, x, y); };
        rows.push_back({"1-NNA", name, one_nna(gen, ref, dist, a.threads)});
        rows.push_back({"COV", name, coverage(gen, ref, dist, a.threads)});
    }
    write_text(a.out, [&](std::ostream& os) {
        os << "metric,distance,value\n";
        for (const auto& r : rows) os << r.metric << ',' << r.distance << ',' << fixed(r.value, 6) << '\n';
    });
    for (const auto& r : rows) log << r.metric << ' ' << r.distance << ' ' << fixed(r.value, 2) << '\n';
    return rows;
}

// ---- figures -------------------------------------------------------------------

std::string render_diagram_svg(const DiagramFile& file) {
    constexpr double size = 400, margin = 40, span = size - 2 * margin;
    double hi = file.r_max;
    for (const auto& pd : file.diagrams) {
        for (const auto& p : pd.pairs) hi = std::max(hi, p.death);
        for (double b : pd.essential) hi = std::max(hi, b);
    }
    if (!(hi > 0) || !std::isfinite(hi)) hi = 1.0;
    const auto x = [&](double v) { return fixed(margin + span * v / hi, 2); };
    const auto y = [&](double v) { return fixed(size - margin - span * v / hi, 2); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" viewBox=\"0 0 400 400\">\n";
    os << "<rect width=\"400\" height=\"400\" fill=\"white\"/>\n";
    os << "<g stroke=\"black\" stroke-width=\"1\">\n";
    os << "<line x1=\"" << x(0) << "\" y1=\"" << y(0) << "\" x2=\"" << x(hi) << "\" y2=\"" << y(0) << "\"/>\n";
    os << "<line x1=\"" << x(0) << "\" y1=\"" << y(0) << "\" x2=\"" << x(0) << "\" y2=\"" << y(hi) << "\"/>\n";
    os << "</g>\n";
    os << "<line x1=\"" << x(0) << "\" y1=\"" << y(0) << "\" x2=\"" << x(hi) << "\" y2=\"" << y(hi)
       << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<text x=\"" << x(0) << "\" y=\"" << fixed(size - margin + 15, 2) << "\" text-anchor=\"middle\">0</text>\n";
    os << "<text x=\"" << x(hi) << "\" y=\"" << fixed(size - margin + 15, 2) << "\" text-anchor=\"middle\">"
       << fixed(hi, 3) << "</text>\n";
    os << "<text x=\"" << fixed(margin - 6, 2) << "\" y=\"" << y(hi) << "\" text-anchor=\"end\">" << fixed(hi, 3)
       << "</text>\n";
    os << "<text x=\"" << fixed(size / 2, 2) << "\" y=\"" << fixed(size - 8, 2)
       << "\" text-anchor=\"middle\">birth</text>\n";
    os << "<text x=\"12\" y=\"" << fixed(size / 2, 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 12 "
       << fixed(size / 2, 2) << ")\">death</text>\n";
    os << "</g>\n";
    for (const auto& pd : file.diagrams) {
        const char* color = colors[std::clamp(pd.dimension, 0, 3)];
        os << "<g fill=\"" << color << "\" data-dim=\"" << pd.dimension << "\">\n";
        for (const auto& p : pd.pairs)
            os << "<circle cx=\"" << x(p.birth) << "\" cy=\"" << y(p.death) << "\" r=\"3\"/>\n";
        for (double b : pd.essential) {
            const double cx = margin + span * b / hi, cy = margin;
            os << "<polygon points=\"" << fixed(cx, 2) << ',' << fixed(cy - 4, 2) << ' ' << fixed(cx - 4, 2) << ','
               << fixed(cy + 3, 2) << ' ' << fixed(cx + 4, 2) << ',' << fixed(cy + 3, 2) << "\"/>\n";
        }
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string render_image_pgm(const PersistenceImage& image) {
    const int n = image.spec.n;
    double peak = 0.0;
    for (double v : image.pixels) peak = std::max(peak, v);
    std::string out = "P5\n" + std::to_string(n) + ' ' + std::to_string(n) + "\n255\n";
    for (int r = n - 1; r >= 0; --r)
        for (int c = 0; c < n; ++c) {
            const double v = peak > 0 ? std::max(0.0, image.at(r, c)) / peak : 0.0;
            out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
        }
    return out;
}

void cmd_show(const ShowArgs& a, std::ostream& log) {
    const auto ext = a.in.extension();
    if (ext == ".csv") {
        auto in = open_in(a.in);
        write_file(a.out, render_diagram_svg(read_diagram_csv(in)));
    } else if (ext == ".tpi") {
        auto in = open_in(a.in, std::ios::binary);
        write_file(a.out, render_image_pgm(read_tpi(in)));
    } else {
        throw InputError("show: expected a diagram .csv or an image .tpi, got " + a.in.string());
    }
    log << "wrote " << a.out.string() << '\n';
}

int run_guarded(const std::function<void()>& body, std::ostream& err) {
    try {
        body();
        return 0;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const ResourceError& e) {
        err << "resource limit: " << e.what() << '\n';
        return 3;
    } catch (const InvariantError& e) {
        err << "internal invariant violated: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace topogen::cli
