// topogen: command-line front end over topogen::cli.
#include "topogen/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace cli = topogen::cli;

int main(int argc, char** argv) {
    CLI::App app{"Topology-conditioned point-cloud diffusion toolkit"};
    app.require_subcommand(1);
    std::function<void()> action;

    cli::SyntheticArgs syn;
    auto* gen = app.add_subcommand("gen-synthetic", "Write a sphere/torus/two-hole-torus dataset as .xyz files");
    gen->add_option("--out", syn.out_dir, "Output directory")->required();
    gen->add_option("--count", syn.count, "Number of clouds");
    gen->add_option("--points", syn.points, "Points per cloud");
    gen->add_option("--noise", syn.noise, "Gaussian jitter");
    gen->add_option("--seed", syn.seed);
    bool no_two_hole = false;
    gen->add_flag("--no-two-hole", no_two_hole, "Only spheres and tori");
    gen->callback([&] {
        syn.two_hole = !no_two_hole;
        action = [&] { cli::cmd_gen_synthetic(syn, std::cerr); };
    });

    cli::PreprocessArgs pre;
    auto* prep = app.add_subcommand("preprocess", "Subsample, normalize and write a manifest");
    prep->add_option("--in", pre.in_dir, "Directory of .xyz/.tpc clouds")->required();
    prep->add_option("--out", pre.out_dir, "Output directory")->required();
    prep->add_option("--points", pre.points, "Points kept per cloud (0 keeps all)");
    prep->add_option("--seed", pre.seed);
    prep->callback([&] { action = [&] { cli::cmd_preprocess(pre, std::cerr); }; });

    cli::ExtractArgs ext;
    auto* extract = app.add_subcommand("extract", "Persistence diagrams per cloud");
    extract->add_option("--manifest", ext.manifest)->required();
    extract->add_option("--out", ext.out_dir)->required();
    extract->add_option("--n-pd", ext.n_pd, "FPS landmarks per cloud");
    extract->add_option("--max-dim", ext.max_dim, "Homology dimensions 0 .. max-dim - 1");
    extract->add_option("--simplex-cap", ext.simplex_cap, "Abort a cloud whose filtration exceeds this size");
    extract->add_option("--threads", ext.threads);
    extract->add_option("--seed", ext.seed);
    extract->callback([&] { action = [&] { cli::cmd_extract(ext, std::cerr); }; });

    cli::RasterizeArgs ras;
    auto* rasterize = app.add_subcommand("rasterize", "Persistence images from diagram files");
    rasterize->add_option("--pd-dir", ras.pd_dir)->required();
    rasterize->add_option("--out", ras.out_dir)->required();
    rasterize->add_option("--n", ras.n, "Image side");
    rasterize->add_option("--sigma", ras.sigma, "Gaussian width");
    rasterize->callback([&] { action = [&] { cli::cmd_rasterize(ras, std::cerr); }; });

    cli::TrainVaeArgs tv;
    auto* train_vae = app.add_subcommand("train-vae", "Train the persistence-image VAE");
    train_vae->add_option("--pi-dir", tv.pi_dir)->required();
    train_vae->add_option("--out", tv.out, "Checkpoint path")->required();
    train_vae->add_option("--epochs", tv.epochs);
    train_vae->add_option("--steps", tv.steps, "Optimizer steps; overrides --epochs");
    train_vae->add_option("--batch", tv.batch);
    train_vae->add_option("--lr", tv.lr);
    train_vae->add_option("--latent", tv.latent);
    train_vae->add_option("--kl-weight", tv.kl_weight);
    train_vae->add_option("--seed", tv.seed);
    train_vae->add_option("--log", tv.log_csv, "Per-step loss CSV");
    train_vae->callback([&] { action = [&] { cli::cmd_train_vae(tv, std::cerr); }; });

    cli::TrainArgs tr;
    auto* train = app.add_subcommand("train", "Train the diffusion model");
    train->add_option("--manifest", tr.manifest)->required();
    train->add_option("--pi-dir", tr.pi_dir);
    train->add_option("--out", tr.out, "Checkpoint path")->required();
    train->add_option("--config", tr.config, "Model config file (key = value)");
    train->add_option("--size", tr.size, "S, B, L or XL");
    train->add_option("--voxel", tr.voxel, "Voxel resolution V");
    train->add_option("--patch", tr.patch, "Patch size p");
    train->add_option("--queries", tr.queries, "Downsampled token count");
    train->add_flag("--no-topology", tr.no_topology, "Drop the topology tokens");
    train->add_option("--epochs", tr.epochs);
    train->add_option("--steps", tr.steps, "Optimizer steps; overrides --epochs");
    train->add_option("--batch", tr.batch);
    train->add_option("--lr", tr.lr);
    train->add_option("--points", tr.points, "Points per cloud per step (0 keeps all)");
    train->add_option("--seed", tr.seed);
    train->add_option("--log", tr.log_csv, "Per-step loss CSV");
    train->callback([&] { action = [&] { cli::cmd_train(tr, std::cerr); }; });

    cli::SampleArgs sa;
    auto* samp = app.add_subcommand("sample", "Generate clouds with a trained model");
    samp->add_option("--model", sa.model, "Checkpoint path")->required();
    samp->add_option("--out", sa.out_dir)->required();
    samp->add_option("--vae", sa.vae, "Draw persistence images from this VAE");
    samp->add_option("--pi-dir", sa.pi_dir, "Use these persistence images, cycled");
    samp->add_flag("--zero-pi", sa.zero_pi, "Condition on all-zero images");
    samp->add_option("--count", sa.count);
    samp->add_option("--points", sa.points);
    samp->add_option("--steps", sa.steps, "Respaced sampling steps (0 = full schedule)");
    samp->add_option("--sigma-mode", sa.sigma_mode, "beta or posterior");
    samp->add_option("--clip", sa.clip, "Bound on the predicted clean sample (<= 0 disables)");
    samp->add_option("--seed", sa.seed);
    samp->callback([&] { action = [&] { cli::cmd_sample(sa, std::cerr); }; });

    cli::EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "1-NNA and COV against a reference set");
    eval->add_option("--gen", ev.gen, "Directory of generated clouds")->required();
    eval->add_option("--ref", ev.ref, "Reference manifest or directory")->required();
    eval->add_option("--out", ev.out, "metrics.csv path")->required();
    eval->add_option("--points", ev.points, "Points per cloud (0 keeps all)");
    eval->add_option("--distance", ev.distances, "CD and/or EMD")->delimiter(',');
    eval->add_option("--threads", ev.threads);
    eval->add_option("--seed", ev.seed);
    eval->callback([&] { action = [&] { cli::cmd_eval(ev, std::cerr); }; });

    cli::ShowArgs sh;
    auto* show = app.add_subcommand("show", "Render a diagram (.csv -> SVG) or an image (.tpi -> PGM)");
    show->add_option("--in", sh.in)->required();
    show->add_option("--out", sh.out)->required();
    show->callback([&] { action = [&] { cli::cmd_show(sh, std::cerr); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    return cli::run_guarded(action, std::cerr);
}
