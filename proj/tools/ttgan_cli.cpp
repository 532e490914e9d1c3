#include "ttgan/ttgan.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

using namespace ttgan;
using nlohmann::json;

namespace {

struct DatasetFlags {
    std::string input;
    std::string format = "keel";
    std::string label_column = "class";
    std::string minority_label;
    std::string missing;
    bool impute_mode = false;
    bool yeo_johnson = false;

    void add(CLI::App* app) {
        app->add_option("-i,--input", input, "Dataset file")->required()->check(CLI::ExistingFile);
        app->add_option("--format", format, "keel or csv")->check(CLI::IsMember({"keel", "csv"}));
        app->add_option("--label-column", label_column, "CSV label column");
        app->add_option("--minority-label", minority_label, "CSV minority label (default: rarer label)");
        app->add_option("--missing", missing, "Missing-value token");
        app->add_flag("--impute-mode", impute_mode, "Replace missing values with the column mode");
        app->add_flag("--yeo-johnson", yeo_johnson, "Power-transform features flagged as power-law");
    }

    harness::DatasetSource source() const {
        harness::DatasetSource s;
        s.format = format;
        s.path = input;
        s.label_column = label_column;
        s.minority_label = minority_label;
        if (!missing.empty()) s.missing_token = missing;
        return s;
    }

    preprocess::PreprocessOptions options() const { return {impute_mode, yeo_johnson}; }
};

struct GanFlags {
    std::string preset;
    std::optional<std::size_t> epochs, batch_size;
    std::optional<double> learning_rate, lambda_t, lambda_c, lambda_i;
    std::optional<double> p_max, s;
    std::string variant;
    std::uint64_t seed = 0;

    void add(CLI::App* app, bool selection) {
        app->add_option("--preset", preset, "Shipped hyperparameter preset");
        app->add_option("--epochs", epochs);
        app->add_option("--batch-size", batch_size);
        app->add_option("--learning-rate", learning_rate);
        app->add_option("--lambda-t", lambda_t, "Translation loss weight");
        app->add_option("--lambda-c", lambda_c, "Cycle loss weight");
        app->add_option("--lambda-i", lambda_i, "Identity loss weight");
        app->add_option("--seed", seed);
        if (selection) {
            app->add_option("--p-max", p_max, "Score threshold for selection");
            app->add_option("-s,--budget", s, "Selected rows as a multiple of the minority count");
            app->add_option("--variant", variant, "upper_bound or closest_to_pmax");
        }
    }

    void apply(gan::TtganConfig& g, resample::SelectionConfig& sel) const {
        if (!preset.empty()) harness::apply_preset(harness::load_preset(preset), g, sel);
        if (epochs) g.epochs = *epochs;
        if (batch_size) g.batch_size = *batch_size;
        if (learning_rate) g.learning_rate = *learning_rate;
        if (lambda_t) g.coefficients.translation = *lambda_t;
        if (lambda_c) g.coefficients.cycle = *lambda_c;
        if (lambda_i) g.coefficients.identity = *lambda_i;
        if (p_max) sel.p_max = *p_max;
        if (s) sel.s = *s;
        if (!variant.empty()) sel.variant = resample::variant_from_string(variant);
        g.seed = seed;
    }
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot read '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error(path + ": " + e.what());
    }
}

std::ofstream open_output(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw error("cannot write '" + path + "'");
    return out;
}

std::shared_ptr<const TrainingSet> training_set(const preprocess::PreprocessPipeline& p, const Dataset& d) {
    return std::make_shared<const TrainingSet>(TrainingSet{preprocess::apply(p, d), d.y});
}

void print_summary(const harness::RunReport& r) {
    std::cout << r.dataset_name << ": " << r.dataset_rows << " rows, IR " << std::fixed << std::setprecision(2)
              << r.imbalance_ratio << '\n';
    std::cout << std::left << std::setw(16) << "method";
    for (const auto& m : r.config.metrics) std::cout << std::setw(22) << m;
    std::cout << std::setw(10) << "rank" << "failures\n";
    std::cout << std::setprecision(4);
    for (const auto& s : r.summary) {
        std::cout << std::setw(16) << s.method;
        for (const auto& m : r.config.metrics) {
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(4);
            if (auto it = s.mean.find(m); it != s.mean.end()) cell << it->second << " +- " << s.stddev.at(m);
            else cell << "NA";
            std::cout << std::setw(22) << cell.str();
        }
        std::cout << std::setw(10) << s.mean_rank << s.failures << '\n';
    }
    for (const auto& run : r.runs) {
        if (run.failure) std::cerr << "warning: " << run.method << " seed " << run.seed << " failed: " << *run.failure << '\n';
    }
}

// ---------------------------------------------------------------------------

void run_ingest(const DatasetFlags& df, const std::string& pipeline_out, const std::string& transformed_out) {
    const Dataset d = harness::load_dataset(df.source());
    const auto pipeline = preprocess::fit(d, df.options());
    json features = json::array();
    for (const auto& f : d.meta) {
        json j{{"name", f.name}, {"kind", f.kind == FeatureKind::numeric ? "numeric" : "categorical"}};
        if (f.kind == FeatureKind::categorical) j["categories"] = f.categories;
        features.push_back(j);
    }
    std::size_t missing = 0;
    for (Index i = 0; i < d.x.size(); ++i) missing += is_missing(d.x.data()[i]) ? 1 : 0;
    json summary{{"name", d.name},
                 {"rows", d.size()},
                 {"features", features},
                 {"majority_label", d.class_labels[0]},
                 {"minority_label", d.class_labels[1]},
                 {"majority_rows", d.majority_count()},
                 {"minority_rows", d.minority_count()},
                 {"imbalance_ratio", imbalance_ratio(d)},
                 {"missing_cells", missing},
                 {"preprocessed_width", pipeline.columns.size()},
                 {"warnings", pipeline.warnings}};
    std::cout << summary.dump(2) << '\n';
    if (!pipeline_out.empty()) open_output(pipeline_out) << preprocess::to_json(pipeline).dump(2) << '\n';
    if (!transformed_out.empty()) {
        const Matrix x = preprocess::apply(pipeline, d);
        auto out = open_output(transformed_out);
        out.precision(17);
        for (const auto& c : pipeline.columns) out << c << '\t';
        out << "class\n";
        for (Index i = 0; i < x.rows(); ++i) {
            for (Index j = 0; j < x.cols(); ++j) out << x(i, j) << '\t';
            out << d.y[static_cast<std::size_t>(i)] << '\n';
        }
    }
}

void run_synth_moons(const harness::TwoMoonsSpec& spec, const std::string& out_csv, const std::string& scatter) {
    const Dataset d = harness::make_two_moons(spec);
    if (!out_csv.empty()) {
        const auto parent = std::filesystem::path(out_csv).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        write_csv(d, out_csv);
    }
    if (!scatter.empty()) {
        auto out = open_output(scatter);
        harness::emit_scatter(d, out);
    }
    if (out_csv.empty() && scatter.empty()) write_csv(d, "/dev/stdout");
}

void run_train(const DatasetFlags& df, const GanFlags& gf, const std::string& mode, const std::string& model_out,
               const std::string& losses_out) {
    const Dataset d = harness::load_dataset(df.source());
    const auto pipeline = preprocess::fit(d, df.options());
    const auto data = training_set(pipeline, d);
    gan::TtganConfig g;
    resample::SelectionConfig sel;
    gf.apply(g, sel);
    g.mode = gan::mode_from_string(mode);
    const Partition part = partition(*data);
    const gan::TtganBundle b = gan::train(part.majority, part.minority, g);
    json model{{"pipeline", preprocess::to_json(pipeline)}, {"ttgan", gan::to_json(b)}, {"dataset", d.name}};
    open_output(model_out) << model.dump() << '\n';
    if (!losses_out.empty()) {
        auto out = open_output(losses_out);
        gan::write_loss_history(b.history, out);
    }
    const auto& last = b.history.back();
    std::cout << "trained " << g.epochs << " epochs; final L_D " << last.discriminator << ", L_G " << last.adversarial
              << '\n';
}

struct OversampleFlags {
    std::string method = "ttgan";
    std::string model;
    std::size_t k = 5;
    std::size_t m = 10;
    double c = 10.0;

    void add(CLI::App* app) {
        app->add_option("--method", method, "ros, smote, bsmote, vanilla_gan or ttgan")
            ->check(CLI::IsMember({"ros", "smote", "bsmote", "vanilla_gan", "ttgan"}));
        app->add_option("--model", model, "Trained model from `train` (GAN methods)")->check(CLI::ExistingFile);
        app->add_option("-k,--neighbors", k, "SMOTE neighbours");
        app->add_option("-m,--danger-neighbors", m, "Borderline-SMOTE neighbourhood");
        app->add_option("-C,--svm-c", c, "Linear SVM regularisation constant");
    }
};

resample::AugmentedDataset oversample(const DatasetFlags& df, const GanFlags& gf, const OversampleFlags& of,
                                      std::vector<gan::LossRecord>* history) {
    const Dataset d = harness::load_dataset(df.source());
    preprocess::PreprocessPipeline pipeline;
    std::optional<gan::TtganBundle> bundle;
    const bool gan_method = of.method == "ttgan" || of.method == "vanilla_gan";
    if (gan_method && !of.model.empty()) {
        const json model = read_json(of.model);
        pipeline = preprocess::pipeline_from_json(model.at("pipeline"));
        bundle = gan::bundle_from_json(model.at("ttgan"));
    } else {
        pipeline = preprocess::fit(d, df.options());
    }
    const auto data = training_set(pipeline, d);
    if (of.method == "ros") return resample::random_oversample(data, gf.seed);
    if (of.method == "smote") return resample::smote(data, of.k, gf.seed);
    if (of.method == "bsmote") return resample::borderline_smote(data, of.k, of.m, gf.seed);

    gan::TtganConfig g;
    resample::SelectionConfig sel;
    gf.apply(g, sel);
    g.mode = of.method == "ttgan" ? gan::Mode::ttgan : gan::Mode::vanilla;
    classify::LinearSvmConfig svm;
    svm.c = of.c;
    svm.seed = gf.seed;
    if (bundle) {
        if (bundle->config.mode != g.mode) {
            throw config_error("model was trained in " + gan::to_string(bundle->config.mode) + " mode");
        }
        classify::LinearSvmClassifier baseline(svm);
        classify::fit_weighted(baseline, *data, svm.class_weighting);
        auto t = classify::translate_and_select(data, *bundle, sel, baseline);
        if (history) *history = bundle->history;
        std::cerr << "generated " << t.diagnostics.generated << ", selected " << t.diagnostics.selected << '\n';
        return std::move(t.augmented);
    }
    auto r = classify::run_algorithm_1(data, g, sel, svm);
    if (history) *history = r.bundle.history;
    std::cerr << "generated " << r.diagnostics.generated << ", selected " << r.diagnostics.selected << '\n';
    return std::move(r.augmented);
}

harness::MethodSpec method_spec(const std::string& name, const GanFlags& gf, const OversampleFlags& of) {
    harness::MethodSpec m;
    m.method = harness::method_from_string(name);
    m.label = name;
    gf.apply(m.gan, m.selection);
    m.gan.mode = m.method == harness::Method::vanilla_gan ? gan::Mode::vanilla : gan::Mode::ttgan;
    m.svm.c = of.c;
    m.smote_k = of.k;
    m.bsmote_m = of.m;
    return m;
}

void write_and_report(const harness::RunReport& r, const std::string& out_dir, bool omit_timing) {
    if (!out_dir.empty()) {
        harness::write_report(r, out_dir, !omit_timing);
        std::cerr << "report written to " << out_dir << '\n';
    }
    print_summary(r);
}

void run_grid_search(const std::string& config_path, const std::string& grid_path, const std::string& label,
                     const std::string& out_path) {
    const json doc = read_json(config_path);
    const harness::ExperimentConfig cfg = harness::config_from_json(doc);
    const harness::MethodSpec* base = nullptr;
    for (const auto& m : cfg.methods) {
        const bool is_gan = m.method == harness::Method::ttgan || m.method == harness::Method::vanilla_gan;
        if ((label.empty() && is_gan) || m.label == label) {
            base = &m;
            break;
        }
    }
    if (base == nullptr) {
        throw config_error(label.empty() ? "config has no GAN method to tune" : "no method labelled '" + label + "'");
    }
    json grid_doc;
    if (!grid_path.empty()) grid_doc = read_json(grid_path);
    else if (doc.contains("grid")) grid_doc = doc.at("grid");
    else throw config_error("no grid given: pass --grid or add a `grid` section to the config");

    const Dataset d = harness::load_dataset(cfg.dataset);
    const auto points = harness::grid_search(d, cfg, *base, harness::grid_from_json(grid_doc, *base));
    json out = json::array();
    for (const auto& p : points) {
        out.push_back({{"epochs", p.method.gan.epochs},
                       {"lambda_T", p.method.gan.coefficients.translation},
                       {"lambda_C", p.method.gan.coefficients.cycle},
                       {"lambda_I", p.method.gan.coefficients.identity},
                       {"s", p.method.selection.s},
                       {"p_max", p.method.selection.p_max},
                       {"validation_map", p.validation_map},
                       {"failures", p.failures}});
    }
    if (!out_path.empty()) open_output(out_path) << out.dump(2) << '\n';
    std::cout << "best: " << out.front().dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular translation GAN oversampling and benchmarking"};
    app.require_subcommand(1);

    // ingest
    DatasetFlags ingest_df;
    std::string ingest_pipeline, ingest_transformed;
    auto* ingest = app.add_subcommand("ingest", "Load a dataset, print its summary and fit the preprocessing");
    ingest_df.add(ingest);
    ingest->add_option("--pipeline", ingest_pipeline, "Write the fitted preprocessing pipeline as JSON");
    ingest->add_option("--transformed", ingest_transformed, "Write the preprocessed matrix as TSV");

    // synth-moons
    harness::TwoMoonsSpec moons;
    std::string moons_out, moons_scatter;
    auto* synth = app.add_subcommand("synth-moons", "Generate an imbalanced two-moons dataset");
    synth->add_option("--n-majority", moons.n_majority);
    synth->add_option("--n-minority", moons.n_minority);
    synth->add_option("--noise", moons.noise);
    synth->add_option("--seed", moons.seed);
    synth->add_option("-o,--output", moons_out, "CSV output (label column `class`)");
    synth->add_option("--scatter", moons_scatter, "Also write a scatter TSV");

    // train
    DatasetFlags train_df;
    GanFlags train_gf;
    std::string train_mode = "ttgan", train_model, train_losses;
    auto* train = app.add_subcommand("train", "Train the GAN on a whole dataset and save the model");
    train_df.add(train);
    train_gf.add(train, false);
    train->add_option("--mode", train_mode, "ttgan or vanilla")->check(CLI::IsMember({"ttgan", "vanilla"}));
    train->add_option("--model", train_model, "Model JSON output")->required();
    train->add_option("--losses", train_losses, "Per-epoch loss history TSV");

    // oversample
    DatasetFlags over_df;
    GanFlags over_gf;
    OversampleFlags over_of;
    std::string over_out, over_scatter, over_losses;
    auto* over = app.add_subcommand("oversample", "Generate synthetic minority rows");
    over_df.add(over);
    over_gf.add(over, true);
    over_of.add(over);
    over->add_option("-o,--output", over_out, "Synthetic rows TSV with source column")->required();
    over->add_option("--scatter", over_scatter, "Scatter TSV (two-feature data only)");
    over->add_option("--losses", over_losses, "Loss history TSV (GAN methods)");

    // evaluate
    DatasetFlags eval_df;
    GanFlags eval_gf;
    OversampleFlags eval_of;
    std::vector<std::string> eval_methods{"rw", "ttgan"};
    std::vector<std::uint64_t> eval_seeds{0};
    std::string eval_out;
    bool eval_omit_timing = false;
    double eval_recall = 0.4;
    auto* eval = app.add_subcommand("evaluate", "Compare methods on one dataset from command-line settings");
    eval_df.add(eval);
    eval_gf.add(eval, true);
    eval_of.add(eval);
    eval->remove_option(eval->get_option("--method"));
    eval->remove_option(eval->get_option("--model"));
    eval->remove_option(eval->get_option("--seed"));
    eval->add_option("--method", eval_methods, "Methods to compare")
        ->check(CLI::IsMember({"rw", "ros", "smote", "bsmote", "vanilla_gan", "ttgan"}));
    eval->add_option("--seeds", eval_seeds, "Split and training seeds");
    eval->add_option("--recall-floor", eval_recall);
    eval->add_option("-o,--output", eval_out, "Report directory");
    eval->add_flag("--omit-timing", eval_omit_timing, "Leave wall-clock fields out of the report");

    // benchmark
    std::string bench_config, bench_out;
    bool bench_omit_timing = false;
    auto* bench = app.add_subcommand("benchmark", "Run an experiment config and write its report");
    bench->add_option("config", bench_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    bench->add_option("-o,--output", bench_out, "Report directory (overrides output_dir)");
    bench->add_flag("--omit-timing", bench_omit_timing, "Leave wall-clock fields out of the report");

    // scatter
    DatasetFlags scat_df;
    GanFlags scat_gf;
    OversampleFlags scat_of;
    std::string scat_out;
    bool scat_raw = false;
    auto* scat = app.add_subcommand("scatter", "Write x, y, class rows for a two-feature dataset and its synthetic rows");
    scat_df.add(scat);
    scat_gf.add(scat, true);
    scat_of.add(scat);
    scat->add_flag("--raw", scat_raw, "Raw points only, no oversampling or preprocessing");
    scat->add_option("-o,--output", scat_out, "Scatter TSV")->required();

    // presets
    std::string preset_name;
    auto* pre = app.add_subcommand("presets", "List shipped hyperparameter presets");
    pre->add_option("name", preset_name, "Show a single preset as JSON");

    // grid-search
    std::string grid_config, grid_file, grid_label, grid_out;
    auto* grid = app.add_subcommand("grid-search", "Tune GAN and selection settings on the validation split");
    grid->add_option("config", grid_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    grid->add_option("--grid", grid_file, "Grid JSON (default: the config's `grid` section)")->check(CLI::ExistingFile);
    grid->add_option("--method", grid_label, "Label of the method to tune (default: first GAN method)");
    grid->add_option("-o,--output", grid_out, "All grid points, best first, as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) {
            run_ingest(ingest_df, ingest_pipeline, ingest_transformed);
        } else if (synth->parsed()) {
            run_synth_moons(moons, moons_out, moons_scatter);
        } else if (train->parsed()) {
            run_train(train_df, train_gf, train_mode, train_model, train_losses);
        } else if (over->parsed()) {
            std::vector<gan::LossRecord> history;
            const auto a = oversample(over_df, over_gf, over_of, &history);
            {
                auto out = open_output(over_out);
                resample::write_selected(a, out);
            }
            if (!over_scatter.empty()) harness::emit_scatter(a, over_scatter);
            if (!over_losses.empty() && !history.empty()) {
                auto out = open_output(over_losses);
                gan::write_loss_history(history, out);
            }
            std::cout << "wrote " << a.added() << " synthetic rows" << (a.fell_back_to_smote ? " (SMOTE fallback)" : "")
                      << '\n';
        } else if (eval->parsed()) {
            harness::ExperimentConfig cfg;
            cfg.name = "evaluate";
            cfg.dataset = eval_df.source();
            cfg.preprocessing = eval_df.options();
            cfg.seeds = eval_seeds;
            cfg.recall_floor = eval_recall;
            for (const auto& m : eval_methods) cfg.methods.push_back(method_spec(m, eval_gf, eval_of));
            write_and_report(harness::run_experiment(cfg), eval_out, eval_omit_timing);
        } else if (bench->parsed()) {
            const harness::ExperimentConfig cfg = harness::config_from_json(read_json(bench_config));
            const std::string out = bench_out.empty() ? cfg.output_dir : bench_out;
            write_and_report(harness::run_experiment(cfg), out, bench_omit_timing);
        } else if (scat->parsed()) {
            auto out = open_output(scat_out);
            if (scat_raw) {
                harness::emit_scatter(harness::load_dataset(scat_df.source()), out);
            } else {
                harness::emit_scatter(oversample(scat_df, scat_gf, scat_of, nullptr), out);
            }
        } else if (pre->parsed()) {
            if (!preset_name.empty()) {
                std::cout << harness::to_json(harness::load_preset(preset_name)).dump(2) << '\n';
            } else {
                std::cout << std::left << std::setw(24) << "name" << std::setw(8) << "epochs" << std::setw(10)
                          << "lambda_T" << std::setw(10) << "lambda_C" << std::setw(10) << "lambda_I" << std::setw(8)
                          << "s" << std::setw(8) << "p_max" << "classifier\n";
                for (const auto& p : harness::presets()) {
                    std::cout << std::setw(24) << p.name << std::setw(8) << p.epochs << std::setw(10) << p.lambda_t
                              << std::setw(10) << p.lambda_c << std::setw(10) << p.lambda_i << std::setw(8) << p.s
                              << std::setw(8) << p.p_max << p.classifier << (p.executable ? "" : " (data only)")
                              << '\n';
                }
            }
        } else if (grid->parsed()) {
            run_grid_search(grid_config, grid_file, grid_label, grid_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
