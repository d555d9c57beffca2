// Command-line front end: prepare, relations, train, eval, predict, ablate.
// Exit codes: 0 success, 2 input/config error, 3 runtime/training error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hetgnn/checkpoint.hpp"
#include "hetgnn/dataset.hpp"
#include "hetgnn/io.hpp"
#include "hetgnn/metrics.hpp"
#include "hetgnn/model.hpp"
#include "hetgnn/relation.hpp"
#include "hetgnn/training.hpp"

namespace fs = std::filesystem;
using namespace hetgnn;

namespace {

struct CommonOpts {
    std::string workdir = ".";
};

struct PrepareOpts {
    std::string data;
    std::string delimiter = ",";
    bool skip_header = false;
    std::size_t window = 32;
    std::string normalization = "max_abs";
    std::vector<double> ratios = {0.6, 0.2, 0.2};
};

struct RelationOpts {
    std::size_t te_bins = 8;
    std::size_t te_history = 1;
    double threshold = 0.1;
    std::string adjacency_norm = "row";
};

struct TrainOpts {
    std::size_t horizon = 3;
    std::size_t hidden = 50;
    std::size_t gnn_layers = 2;
    std::vector<std::size_t> kernel_sizes = {3, 5, 7};
    std::size_t channels = 8;
    std::string relations = "sim,cas,dyn";
    bool no_attention = false;
    std::string loss = "auto";
    std::size_t batch = 32;
    std::size_t epochs = 100;
    double lr = 1e-3;
    std::uint64_t seed = 1;
    std::size_t patience = 15;
    double clip = 5.0;
    std::string out;
    std::string log;
};

struct EvalOpts {
    std::vector<std::string> checkpoints;
    std::string split = "test";
    bool persistence = false;
    std::vector<std::size_t> horizons;
};

struct PredictOpts {
    std::string checkpoint;
    std::string window_file;
    std::string delimiter = ",";
};

char delimiter_char(const std::string& s) {
    if (s == "\\t" || s == "tab") return '\t';
    if (s.size() != 1) throw ConfigError("delimiter must be a single character (or 'tab')");
    return s[0];
}

// Flat key=value config file; values act as defaults that explicit CLI
// flags override. Keys use the long option names without the leading
// dashes; list values are comma-separated.
std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = hetgnn::detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + " is not key=value: " + t);
        kv[hetgnn::detail::trim(t.substr(0, eq))] = hetgnn::detail::trim(t.substr(eq + 1));
    }
    return kv;
}

template <typename T>
void cfg_num(const std::map<std::string, std::string>& kv, const char* key, T& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
        if constexpr (std::is_floating_point_v<T>)
            out = static_cast<T>(std::stod(it->second));
        else
            out = static_cast<T>(std::stoull(it->second));
    } catch (const std::exception&) {
        throw ConfigError(std::string("config key ") + key + " has a bad value: " + it->second);
    }
}

void cfg_str(const std::map<std::string, std::string>& kv, const char* key, std::string& out) {
    auto it = kv.find(key);
    if (it != kv.end()) out = it->second;
}

void cfg_flag(const std::map<std::string, std::string>& kv, const char* key, bool& out) {
    auto it = kv.find(key);
    if (it != kv.end()) out = it->second == "1" || it->second == "true";
}

std::vector<std::size_t> parse_size_list(const std::string& csv, const char* what) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        try {
            out.push_back(std::stoull(csv.substr(pos, comma - pos)));
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + " has a bad entry: " + csv);
        }
        pos = comma + 1;
    }
    return out;
}

std::vector<Relation> parse_relations(const std::string& csv) {
    std::vector<Relation> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        out.push_back(relation_from_string(csv.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

std::string dataset_label(const Manifest& manifest) { return fs::path(manifest.data_path).filename().string(); }

Manifest load_manifest(const CommonOpts& common) {
    return Manifest::load((fs::path(common.workdir) / "manifest.txt").string());
}

// Raw file -> normalized series using the scales recorded at prepare time.
SeriesMatrix load_normalized(const Manifest& manifest) {
    SeriesMatrix raw = load_series(manifest.data_path, manifest.delimiter, manifest.skip_header);
    if (raw.n() != manifest.n || raw.L() != manifest.L)
        throw FormatError("data file no longer matches the manifest (n=" + std::to_string(raw.n()) +
                          ", L=" + std::to_string(raw.L()) + " vs manifest n=" + std::to_string(manifest.n) +
                          ", L=" + std::to_string(manifest.L) + ")");
    return apply_scales(raw, manifest.scales);
}

RelationConfig read_relation_config(const std::string& workdir) {
    const std::string path = (fs::path(workdir) / "relations_summary.txt").string();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path + " (run `relations` first)");
    RelationConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        std::string key;
        is >> key;
        if (key == "te_bins") is >> cfg.te_bins;
        else if (key == "te_history_k") is >> cfg.te_history_k;
        else if (key == "threshold") is >> cfg.threshold;
        else if (key == "adjacency_norm") {
            std::string v;
            is >> v;
            cfg.adjacency_norm = adjacency_norm_from_string(v);
        }
    }
    return cfg;
}

RelationStack read_relation_stack(const std::string& workdir, std::size_t n) {
    RelationStack stack;
    stack.n = n;
    for (const char* tag : {"sim", "cas", "dyn"}) {
        const std::string file = std::string(tag) == "dyn" ? "D_base.txt" : std::string("A_") + tag + ".txt";
        const std::string path = (fs::path(workdir) / file).string();
        if (!fs::exists(path)) throw IoError("missing " + path + " (run `relations` first)");
        Matrix m = read_matrix(path);
        if (m.rows != n || m.cols != n)
            throw DimensionError("relation matrix " + file + " is " + std::to_string(m.rows) + "x" +
                                 std::to_string(m.cols) + ", expected " + std::to_string(n));
        stack.matrices.push_back(std::move(m));
        stack.tags.push_back(tag);
    }
    return stack;
}

Model build_model(const Manifest& manifest, const TrainOpts& opt, const RelationConfig& rcfg) {
    Model model;
    model.n = manifest.n;
    model.window_T = manifest.window_T;
    model.temporal.kernel_sizes = opt.kernel_sizes;
    model.temporal.channels_per_branch = opt.channels;
    model.cfg.gnn_layers = opt.gnn_layers;
    model.cfg.hidden_size = opt.hidden;
    model.cfg.relations = parse_relations(opt.relations);
    model.cfg.attention_enabled = !opt.no_attention;
    model.rel_cfg = rcfg;
    model.validate();
    return model;
}

Checkpoint make_checkpoint(const Manifest& manifest, const Model& model, const TrainOpts& opt,
                           const TrainResult& result, const RelationStack& stack) {
    Checkpoint ck;
    ck.manifest_hash = manifest.config_hash();
    ck.config["n"] = std::to_string(model.n);
    ck.config["window_T"] = std::to_string(model.window_T);
    ck.config["horizon"] = std::to_string(opt.horizon);
    ck.config["normalization"] = to_string(manifest.normalization);
    {
        std::string ks;
        for (std::size_t i = 0; i < model.temporal.kernel_sizes.size(); ++i) {
            if (i) ks += ',';
            ks += std::to_string(model.temporal.kernel_sizes[i]);
        }
        ck.config["kernel_sizes"] = ks;
    }
    ck.config["channels"] = std::to_string(model.temporal.channels_per_branch);
    ck.config["gnn_layers"] = std::to_string(model.cfg.gnn_layers);
    ck.config["hidden_size"] = std::to_string(model.cfg.hidden_size);
    {
        std::string rs;
        for (std::size_t i = 0; i < model.cfg.relations.size(); ++i) {
            if (i) rs += ',';
            rs += to_string(model.cfg.relations[i]);
        }
        ck.config["relations"] = rs;
    }
    ck.config["attention"] = model.cfg.attention_enabled ? "1" : "0";
    ck.config["te_bins"] = std::to_string(model.rel_cfg.te_bins);
    ck.config["te_history_k"] = std::to_string(model.rel_cfg.te_history_k);
    ck.config["threshold"] = format_double(model.rel_cfg.threshold);
    ck.config["adjacency_norm"] = to_string(model.rel_cfg.adjacency_norm);
    ck.config["loss"] = to_string(result.chosen_loss);
    ck.config["seed"] = std::to_string(opt.seed);
    ck.config["dataset"] = dataset_label(manifest);
    ck.scales = manifest.scales;
    ck.stack = stack;
    ck.params = result.params.snapshot();
    return ck;
}

int cmd_prepare(const CommonOpts& common, const PrepareOpts& opt) {
    DatasetConfig dcfg;
    dcfg.window_T = opt.window;
    dcfg.normalization = normalization_from_string(opt.normalization);
    if (opt.ratios.size() != 3) throw ConfigError("--ratios needs exactly three values");
    for (int i = 0; i < 3; ++i) dcfg.split_ratios[i] = opt.ratios[i];
    dcfg.validate();

    const char delim = delimiter_char(opt.delimiter);
    SeriesMatrix raw = load_series(opt.data, delim, opt.skip_header);
    SplitRanges splits = chronological_split(raw, dcfg);
    auto scales = normalize(raw, dcfg.normalization, splits.train).second;

    fs::create_directories(common.workdir);
    Manifest manifest;
    manifest.data_path = fs::absolute(opt.data).string();
    manifest.delimiter = delim;
    manifest.skip_header = opt.skip_header;
    manifest.normalization = dcfg.normalization;
    manifest.window_T = dcfg.window_T;
    manifest.n = raw.n();
    manifest.L = raw.L();
    manifest.splits = splits;
    manifest.scales = scales;
    manifest.save((fs::path(common.workdir) / "manifest.txt").string());

    std::cout << "prepared " << dataset_label(manifest) << ": n=" << manifest.n << " L=" << manifest.L
              << " splits=[0," << splits.train.end << ")[" << splits.train.end << "," << splits.valid.end << ")["
              << splits.valid.end << "," << manifest.L << ")\n";
    std::cout << "manifest " << (fs::path(common.workdir) / "manifest.txt").string() << "\n";
    return 0;
}

int cmd_relations(const CommonOpts& common, const RelationOpts& opt) {
    Manifest manifest = load_manifest(common);
    SeriesMatrix data = load_normalized(manifest);

    RelationConfig rcfg;
    rcfg.te_bins = opt.te_bins;
    rcfg.te_history_k = opt.te_history;
    rcfg.threshold = opt.threshold;
    rcfg.adjacency_norm = adjacency_norm_from_string(opt.adjacency_norm);
    rcfg.validate();

    RelationStack stack = build_relation_stack(data, manifest.splits.train, manifest.window_T, rcfg);

    const fs::path dir(common.workdir);
    write_matrix((dir / "A_sim.txt").string(), stack.by_tag("sim"));
    write_matrix((dir / "A_cas.txt").string(), stack.by_tag("cas"));
    write_matrix((dir / "D_base.txt").string(), stack.by_tag("dyn"));

    std::ostringstream summary;
    summary << "# relation summary (matrices computed on the training range)\n";
    summary << "te_bins " << rcfg.te_bins << '\n';
    summary << "te_history_k " << rcfg.te_history_k << '\n';
    summary << "threshold " << format_double(rcfg.threshold) << '\n';
    summary << "adjacency_norm " << to_string(rcfg.adjacency_norm) << '\n';
    bool all_empty = true;
    for (std::size_t r = 0; r < stack.matrices.size(); ++r) {
        MatrixSummary s = summarize_matrix(stack.tags[r], stack.matrices[r]);
        if (stack.tags[r] != "dyn" && s.density > 0.0) all_empty = false;
        summary << "matrix " << s.tag << " density " << format_double(s.density) << " min_nonzero "
                << format_double(s.min_nonzero) << " max " << format_double(s.max) << '\n';
    }
    std::ofstream out(dir / "relations_summary.txt");
    if (!out) throw IoError("cannot write relations summary");
    out << summary.str();
    out.close();

    std::cout << summary.str();
    if (all_empty)
        std::cerr << "warning: static adjacency graphs are empty at threshold " << opt.threshold << "\n";
    return 0;
}

TrainResult run_training(const Manifest& manifest, const SeriesMatrix& data, const Model& model,
                         const TrainOpts& opt, const RelationStack& stack) {
    DatasetConfig dcfg;
    dcfg.window_T = manifest.window_T;
    dcfg.horizon_h = opt.horizon;
    dcfg.normalization = manifest.normalization;

    auto train_samples = make_samples(data, manifest.splits.train, dcfg);
    auto valid_samples = make_samples(data, manifest.splits.valid, dcfg);

    TrainConfig tcfg;
    tcfg.loss = loss_from_string(opt.loss);
    tcfg.batch_size = opt.batch;
    tcfg.epochs = opt.epochs;
    tcfg.lr = opt.lr;
    tcfg.seed = opt.seed;
    tcfg.early_stop_patience = opt.patience;
    tcfg.clip_norm = opt.clip;

    return train(model, stack, train_samples, valid_samples, tcfg, opt.horizon);
}

int cmd_train(const CommonOpts& common, const TrainOpts& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    Manifest manifest = load_manifest(common);
    SeriesMatrix data = load_normalized(manifest);
    RelationConfig rcfg = read_relation_config(common.workdir);
    RelationStack stack = read_relation_stack(common.workdir, manifest.n);
    Model model = build_model(manifest, opt, rcfg);

    TrainResult result = run_training(manifest, data, model, opt, stack);

    const fs::path dir(common.workdir);
    const std::string ckpt_path =
        opt.out.empty() ? (dir / ("model_h" + std::to_string(opt.horizon) + ".ckpt")).string() : opt.out;
    const std::string log_path =
        opt.log.empty() ? (dir / ("train_h" + std::to_string(opt.horizon) + ".log")).string() : opt.log;

    Checkpoint ck = make_checkpoint(manifest, model, opt, result, stack);
    ck.save(ckpt_path);
    write_training_log(log_path, result.log);

    const auto t1 = std::chrono::steady_clock::now();
    std::cout << "trained h=" << opt.horizon << " loss=" << to_string(result.chosen_loss) << " best_epoch="
              << result.best_epoch << " val_rse=" << format_double(result.best_val_rse) << " val_rae="
              << format_double(result.best_val_rae) << " val_corr=" << format_double(result.best_val_corr)
              << " epochs_run=" << result.log.size() << " wall_s="
              << std::chrono::duration_cast<std::chrono::seconds>(t1 - t0).count() << "\n";
    std::cout << "checkpoint " << ckpt_path << "\n";
    std::cout << "log " << log_path << "\n";
    return 0;
}

void emit_report(const CommonOpts& common, const ForecastReport& rep, const std::string& dataset,
                 const std::string& split, const std::vector<std::string>& ids, const std::string& stem) {
    const fs::path dir(common.workdir);
    const std::string text = report_text(rep, dataset, split, ids);
    std::cout << text;
    std::ofstream rf(dir / (stem + ".txt"));
    if (!rf) throw IoError("cannot write report file");
    rf << text;
    std::ofstream csv(dir / "results.csv", std::ios::app);
    if (!csv) throw IoError("cannot append results.csv");
    csv << report_csv_row(rep, dataset) << '\n';
}

int cmd_eval(const CommonOpts& common, const EvalOpts& opt) {
    Manifest manifest = load_manifest(common);
    SeriesMatrix raw = load_series(manifest.data_path, manifest.delimiter, manifest.skip_header);
    const IndexRange range = manifest.range_for(opt.split);

    std::vector<std::string> ids = raw.variable_ids;

    if (opt.persistence) {
        if (opt.horizons.empty()) throw ConfigError("--persistence needs --horizon");
        SeriesMatrix data = apply_scales(raw, manifest.scales);
        for (std::size_t h : opt.horizons) {
            DatasetConfig dcfg;
            dcfg.window_T = manifest.window_T;
            dcfg.horizon_h = h;
            ForecastReport rep = persistence_baseline(data, range, dcfg);
            emit_report(common, rep, dataset_label(manifest) + ":persistence", opt.split, ids,
                        "report_persistence_h" + std::to_string(h) + "_" + opt.split);
        }
        return 0;
    }

    if (opt.checkpoints.empty()) throw ConfigError("eval needs --checkpoint (or --persistence)");
    for (const std::string& path : opt.checkpoints) {
        Checkpoint ck = Checkpoint::load(path);
        if (ck.manifest_hash != manifest.config_hash())
            throw ConfigError("checkpoint " + path + " does not match this manifest (config hash mismatch)");
        Model model = model_from_checkpoint(ck);
        SeriesMatrix data = apply_scales(raw, ck.scales);
        DatasetConfig dcfg;
        dcfg.window_T = model.window_T;
        dcfg.horizon_h = ck.cfg_size("horizon");
        auto samples = make_samples(data, range, dcfg);
        if (samples.empty()) throw DimensionError("split '" + opt.split + "' yields no samples at this horizon");
        ForecastReport rep = evaluate_samples(model, ck.params, ck.stack, samples, dcfg.horizon_h);
        emit_report(common, rep, ck.cfg("dataset"), opt.split, ids,
                    "report_h" + std::to_string(dcfg.horizon_h) + "_" + opt.split);
    }
    return 0;
}

int cmd_predict(const PredictOpts& opt) {
    Checkpoint ck = Checkpoint::load(opt.checkpoint);
    Model model = model_from_checkpoint(ck);

    SeriesMatrix win = load_series(opt.window_file, delimiter_char(opt.delimiter), false);
    if (win.L() != model.window_T)
        throw DimensionError("window file has " + std::to_string(win.L()) + " rows, model expects window_T=" +
                             std::to_string(model.window_T));
    if (win.n() != model.n)
        throw DimensionError("window file has " + std::to_string(win.n()) + " variables, model expects n=" +
                             std::to_string(model.n));

    SeriesMatrix norm = apply_scales(win, ck.scales);
    Matrix window(model.n, model.window_T);
    for (std::size_t i = 0; i < model.n; ++i)
        for (std::size_t t = 0; t < model.window_T; ++t) window(i, t) = norm.values(i, t);

    ParameterStore params = ck.params.snapshot();
    Tensor out = model.forward(nullptr, Tensor::from_matrix(window), ck.stack, params);
    for (std::size_t i = 0; i < model.n; ++i)
        std::cout << "v" << i << " " << format_double(out.data()[i] * ck.scales[i]) << "\n";
    return 0;
}

int cmd_ablate(const CommonOpts& common, const TrainOpts& base) {
    Manifest manifest = load_manifest(common);
    SeriesMatrix data = load_normalized(manifest);
    RelationConfig rcfg = read_relation_config(common.workdir);
    RelationStack stack = read_relation_stack(common.workdir, manifest.n);

    struct Variant {
        const char* name;
        const char* relations;
        bool attention;
    };
    const Variant variants[] = {
        {"full", "sim,cas,dyn", true},
        {"type1", "cas", true},
        {"type2", "sim", true},
        {"type3", "dyn", true},
        {"type4", "sim,cas,dyn", false},
    };

    DatasetConfig dcfg;
    dcfg.window_T = manifest.window_T;
    dcfg.horizon_h = base.horizon;
    auto test_samples = make_samples(data, manifest.splits.test, dcfg);

    std::ostringstream table;
    table << "# ablation h=" << base.horizon << " seed=" << base.seed << " epochs=" << base.epochs << "\n";
    table << "# variant val_rse val_rae val_corr test_rse test_rae test_corr best_epoch\n";
    for (const Variant& v : variants) {
        TrainOpts opt = base;
        opt.relations = v.relations;
        opt.no_attention = !v.attention;
        Model model = build_model(manifest, opt, rcfg);
        TrainResult res = run_training(manifest, data, model, opt, stack);
        ForecastReport test = evaluate_samples(model, res.params, stack, test_samples, base.horizon);
        table << v.name << ' ' << format_double(res.best_val_rse) << ' ' << format_double(res.best_val_rae)
              << ' ' << format_double(res.best_val_corr) << ' ' << format_double(test.rse) << ' '
              << format_double(test.rae) << ' ' << format_double(test.corr) << ' ' << res.best_epoch << '\n';
        std::cout << "ablate " << v.name << " done: val_rse=" << format_double(res.best_val_rse) << "\n";
    }

    const fs::path out = fs::path(common.workdir) / ("ablation_h" + std::to_string(base.horizon) + ".txt");
    std::ofstream f(out);
    if (!f) throw IoError("cannot write " + out.string());
    f << table.str();
    std::cout << table.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multivariate time-series forecasting with heterogeneous graph neural networks"};
    app.require_subcommand(1);

    CommonOpts common;
    PrepareOpts prep;
    RelationOpts rel;
    TrainOpts tr;
    EvalOpts ev;
    PredictOpts pr;

    // config pre-pass: apply file values as defaults before CLI parsing
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc)
            config_path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0)
            config_path = arg.substr(9);
    }
    if (!config_path.empty()) {
        try {
            const auto kv = load_config_file(config_path);
            cfg_str(kv, "workdir", common.workdir);
            cfg_str(kv, "data", prep.data);
            cfg_str(kv, "delimiter", prep.delimiter);
            cfg_flag(kv, "skip-header", prep.skip_header);
            cfg_num(kv, "window", prep.window);
            cfg_str(kv, "normalization", prep.normalization);
            cfg_num(kv, "te-bins", rel.te_bins);
            cfg_num(kv, "te-history", rel.te_history);
            cfg_num(kv, "threshold", rel.threshold);
            cfg_str(kv, "adjacency-norm", rel.adjacency_norm);
            cfg_num(kv, "horizon", tr.horizon);
            cfg_num(kv, "hidden", tr.hidden);
            cfg_num(kv, "gnn-layers", tr.gnn_layers);
            if (kv.count("kernel-sizes"))
                tr.kernel_sizes = parse_size_list(kv.at("kernel-sizes"), "kernel-sizes");
            cfg_num(kv, "channels", tr.channels);
            cfg_str(kv, "relations", tr.relations);
            cfg_flag(kv, "no-attention", tr.no_attention);
            cfg_str(kv, "loss", tr.loss);
            cfg_num(kv, "batch", tr.batch);
            cfg_num(kv, "epochs", tr.epochs);
            cfg_num(kv, "lr", tr.lr);
            cfg_num(kv, "seed", tr.seed);
            cfg_num(kv, "patience", tr.patience);
            cfg_num(kv, "clip", tr.clip);
            cfg_str(kv, "split", ev.split);
        } catch (const std::runtime_error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
    }

    auto add_workdir = [&common](CLI::App* sub) {
        sub->add_option("--workdir", common.workdir, "working directory")->envname("HETGNN_WORKDIR");
        sub->add_option("--config", "flat key=value config file (applied as defaults)");
    };

    CLI::App* prepare = app.add_subcommand("prepare", "load, normalize and split a dataset");
    add_workdir(prepare);
    prepare->add_option("--data", prep.data, "delimited data file")->required();
    prepare->add_option("--delimiter", prep.delimiter, "column delimiter (default ,)");
    prepare->add_flag("--skip-header", prep.skip_header, "skip one header row");
    prepare->add_option("--window", prep.window, "input window length T");
    prepare->add_option("--normalization", prep.normalization, "max_abs or none");
    prepare->add_option("--ratios", prep.ratios, "train/valid/test split ratios")->expected(3);

    CLI::App* relations = app.add_subcommand("relations", "compute static relation matrices");
    add_workdir(relations);
    relations->add_option("--te-bins", rel.te_bins, "histogram bins for transfer entropy");
    relations->add_option("--te-history", rel.te_history, "history length k");
    relations->add_option("--threshold", rel.threshold, "sparsification threshold");
    relations->add_option("--adjacency-norm", rel.adjacency_norm, "row or none");

    auto add_train_opts = [&tr](CLI::App* sub) {
        sub->add_option("--horizon", tr.horizon, "forecast horizon");
        sub->add_option("--hidden", tr.hidden, "GNN hidden size");
        sub->add_option("--gnn-layers", tr.gnn_layers, "propagation layers");
        sub->add_option("--kernel-sizes", tr.kernel_sizes, "convolution kernel sizes");
        sub->add_option("--channels", tr.channels, "channels per convolution branch");
        sub->add_option("--relations", tr.relations, "enabled relations, e.g. sim,cas,dyn");
        sub->add_flag("--no-attention", tr.no_attention, "average relations instead of attention");
        sub->add_option("--loss", tr.loss, "l1, l2 or auto");
        sub->add_option("--batch", tr.batch, "mini-batch size");
        sub->add_option("--epochs", tr.epochs, "max training epochs");
        sub->add_option("--lr", tr.lr, "Adam learning rate");
        sub->add_option("--seed", tr.seed, "RNG seed");
        sub->add_option("--patience", tr.patience, "early-stop patience");
        sub->add_option("--clip", tr.clip, "gradient clip norm");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train a model for one horizon");
    add_workdir(train_cmd);
    add_train_opts(train_cmd);
    train_cmd->add_option("--out", tr.out, "checkpoint output path");
    train_cmd->add_option("--log", tr.log, "training log output path");

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate checkpoints or the persistence baseline");
    add_workdir(eval_cmd);
    eval_cmd->add_option("--checkpoint", ev.checkpoints, "checkpoint file(s)");
    eval_cmd->add_option("--split", ev.split, "train, valid or test");
    eval_cmd->add_flag("--persistence", ev.persistence, "score the last-value baseline");
    eval_cmd->add_option("--horizon", ev.horizons, "horizon(s) for --persistence");

    CLI::App* predict = app.add_subcommand("predict", "forecast from one window file");
    predict->add_option("--config", "flat key=value config file (applied as defaults)");
    predict->add_option("--checkpoint", pr.checkpoint, "checkpoint file")->required();
    predict->add_option("--window", pr.window_file, "window file (T rows, n columns)")->required();
    predict->add_option("--delimiter", pr.delimiter, "window file delimiter");

    CLI::App* ablate = app.add_subcommand("ablate", "train full model and type1-4 variants, tabulate");
    add_workdir(ablate);
    add_train_opts(ablate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (prepare->parsed()) return cmd_prepare(common, prep);
        if (relations->parsed()) return cmd_relations(common, rel);
        if (train_cmd->parsed()) return cmd_train(common, tr);
        if (eval_cmd->parsed()) return cmd_eval(common, ev);
        if (predict->parsed()) return cmd_predict(pr);
        if (ablate->parsed()) return cmd_ablate(common, tr);
    } catch (const TrainingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ContractError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const MetricError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        // IoError, ParseError, FormatError, DimensionError, ConfigError
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
