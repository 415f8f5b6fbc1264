#include "asmap/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace asmap {

std::string method_name(FeatureMethod m) {
    switch (m) {
        case FeatureMethod::De: return "DE";
        case FeatureMethod::Dasm: return "DASM";
        case FeatureMethod::Rasm: return "RASM";
        case FeatureMethod::Dcau: return "DCAU";
        case FeatureMethod::AsMapCnn: return "AsMapCnn";
    }
    return "?";
}

FeatureMethod method_from_name(const std::string& s) {
    if (s == "DE") return FeatureMethod::De;
    if (s == "DASM") return FeatureMethod::Dasm;
    if (s == "RASM") return FeatureMethod::Rasm;
    if (s == "DCAU") return FeatureMethod::Dcau;
    if (s == "AsMapCnn") return FeatureMethod::AsMapCnn;
    throw std::invalid_argument("unknown feature method '" + s + "'");
}

std::string BandSelection::name() const {
    return all ? "ALL" : canonical_bands()[band_index].name;
}

std::vector<std::size_t> BandSelection::indices() const {
    if (all) {
        std::vector<std::size_t> idx(canonical_bands().size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        return idx;
    }
    return {band_index};
}

BandSelection band_selection_from_name(const std::string& s) {
    BandSelection sel;
    if (s == "ALL" || s == "all") {
        sel.all = true;
        return sel;
    }
    const auto& bands = canonical_bands();
    for (std::size_t i = 0; i < bands.size(); ++i)
        if (bands[i].name == s) {
            sel.all = false;
            sel.band_index = i;
            return sel;
        }
    throw std::invalid_argument("unknown band '" + s + "'");
}

namespace {

struct SmoothedTrial {
    DeTensor de;
    LabelInfo label;
    std::string trial_id;
    std::string subject_id;
    std::vector<std::string> channel_labels;
};

std::vector<Recording> resolve_data(const ExperimentConfig& cfg) {
    if (cfg.synth && !cfg.manifest_path.empty())
        throw std::invalid_argument("experiment: manifest and synth source both set");
    if (cfg.synth) return synth_generate(*cfg.synth);
    if (cfg.manifest_path.empty())
        throw std::invalid_argument("experiment: no data source configured");
    return load_recordings(cfg.manifest_path);
}

std::vector<SmoothedTrial> prepare_trials(const std::vector<Recording>& recordings,
                                          const ExperimentConfig& cfg) {
    std::vector<SmoothedTrial> trials;
    trials.reserve(recordings.size());
    for (const auto& rec : recordings) {
        SmoothedTrial t;
        t.de = smooth_moving_average(compute_de(rec, canonical_bands(), cfg.spectral),
                                     cfg.smoothing_span);
        t.label = rec.label;
        t.trial_id = rec.trial_id;
        t.subject_id = rec.subject_id;
        t.channel_labels = rec.channel_labels;
        trials.push_back(std::move(t));
    }
    return trials;
}

ChannelPairing resolve_pairing(FeatureMethod method, const ExperimentConfig& cfg,
                               const std::vector<std::string>& channel_labels) {
    const PairingKind kind = method == FeatureMethod::Dcau
                                 ? PairingKind::FrontalPosterior
                                 : PairingKind::Hemispheric;
    if (!cfg.pairing_file.empty())
        return load_pairing(cfg.pairing_file, kind, channel_labels);
    return default_pairing(kind, channel_labels);
}

std::vector<LabeledWindow> featurize(const std::vector<SmoothedTrial>& trials,
                                     FeatureMethod method, const BandSelection& bands,
                                     double window_seconds, LabelScheme scheme,
                                     const ExperimentConfig& cfg) {
    std::vector<LabeledWindow> out;
    const auto band_idx = bands.indices();
    for (const auto& trial : trials) {
        const std::size_t cls = assign_label(trial.label, scheme);
        const auto wde =
            select_bands(window_average(trial.de, window_seconds), band_idx);

        ChannelPairing pairing;
        if (method == FeatureMethod::Dasm || method == FeatureMethod::Rasm ||
            method == FeatureMethod::Dcau)
            pairing = resolve_pairing(method, cfg, trial.channel_labels);

        for (std::size_t w = 0; w < wde.n_windows; ++w) {
            LabeledWindow lw;
            lw.class_index = cls;
            lw.trial_id = trial.trial_id;
            lw.subject_id = trial.subject_id;
            lw.window_index = w;
            if (method == FeatureMethod::AsMapCnn) {
                const auto norm = normalize_asmap(asmap_raw(wde, w));
                const std::size_t nc = norm.n_channels, nb = norm.n_bands();
                Tensor t({nb, nc, nc});
                for (std::size_t b = 0; b < nb; ++b)
                    for (std::size_t i = 0; i < nc; ++i)
                        for (std::size_t j = 0; j < nc; ++j)
                            t.at3(b, i, j) = norm.at(i, j, b);
                lw.features = std::move(t);
            } else {
                std::vector<double> v;
                switch (method) {
                    case FeatureMethod::De: v = feature_de_flat(wde, w); break;
                    case FeatureMethod::Dasm: v = feature_dasm(wde, w, pairing); break;
                    case FeatureMethod::Rasm: v = feature_rasm(wde, w, pairing); break;
                    case FeatureMethod::Dcau: v = feature_dcau(wde, w, pairing); break;
                    default: break;
                }
                Tensor t({v.size()});
                t.data = std::move(v);
                lw.features = std::move(t);
            }
            out.push_back(std::move(lw));
        }
    }
    return out;
}

Model build_model(FeatureMethod method, const std::vector<LabeledWindow>& windows,
                  std::size_t n_classes, std::uint64_t seed) {
    ModelSpec spec;
    spec.n_classes = n_classes;
    const Tensor& first = windows.front().features;
    if (method == FeatureMethod::AsMapCnn) {
        spec.kind = ModelKind::Cnn;
        spec.in_channels = first.shape[0];
        spec.in_h = first.shape[1];
        spec.in_w = first.shape[2];
    } else {
        spec.kind = ModelKind::Mlp;
        spec.in_dim = first.size();
    }
    Rng rng(seed);
    return init_params(rng, spec);
}

struct TrainedCell {
    Model model;
    TrainResult train_result;
    EvaluationReport report;
};

TrainedCell train_and_evaluate(FeatureMethod method,
                               const std::vector<LabeledWindow>& windows,
                               LabelScheme scheme, const SplitSpec& split_spec,
                               const TrainConfig& train_cfg) {
    if (windows.empty()) throw std::invalid_argument("experiment: no windows produced");
    const std::size_t n_classes = scheme_n_classes(scheme);
    const auto parts = split(windows, split_spec);

    std::set<std::size_t> train_classes;
    std::vector<Tensor> xs;
    std::vector<std::size_t> ys;
    xs.reserve(parts.train_indices.size());
    for (std::size_t i : parts.train_indices) {
        xs.push_back(windows[i].features);
        ys.push_back(windows[i].class_index);
        train_classes.insert(windows[i].class_index);
    }
    std::set<std::size_t> present;
    for (const auto& w : windows) present.insert(w.class_index);
    for (std::size_t cls : present)
        if (!train_classes.count(cls))
            throw std::invalid_argument("invalid-split: class " + std::to_string(cls) +
                                        " absent from the training set");

    TrainedCell cell{build_model(method, windows, n_classes, train_cfg.seed), {}, {}};
    cell.train_result = train(cell.model, xs, ys, train_cfg);

    std::vector<LabeledWindow> test;
    test.reserve(parts.test_indices.size());
    for (std::size_t i : parts.test_indices) test.push_back(windows[i]);
    cell.report = evaluate(cell.model, test);
    cell.report.history = cell.train_result.history;
    cell.report.seed = train_cfg.seed;
    return cell;
}

std::string stage(const std::string& name, const std::string& what) {
    return "[" + name + "] " + what;
}

}  // namespace

EvaluationReport evaluate(const Model& model, const std::vector<LabeledWindow>& test) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
    const std::size_t n = model.spec.n_classes;
    EvaluationReport report;
    report.confusion.assign(n, std::vector<std::size_t>(n, 0));
    for (const auto& w : test) {
        const auto probs = predict(model, w.features);
        const auto pred = static_cast<std::size_t>(
            std::max_element(probs.begin(), probs.end()) - probs.begin());
        if (w.class_index >= n)
            throw std::invalid_argument("evaluate: class index out of range");
        ++report.confusion[w.class_index][pred];
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += report.confusion[i][i];
    report.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    report.precision.assign(n, 0.0);
    report.recall.assign(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t col = 0, row = 0;
        for (std::size_t i = 0; i < n; ++i) {
            col += report.confusion[i][c];
            row += report.confusion[c][i];
        }
        report.precision[c] = col ? static_cast<double>(report.confusion[c][c]) / col : 0.0;
        report.recall[c] = row ? static_cast<double>(report.confusion[c][c]) / row : 0.0;
    }
    return report;
}

std::vector<LabeledWindow> build_windows(const std::vector<Recording>& recordings,
                                         const ExperimentConfig& cfg) {
    const auto trials = prepare_trials(recordings, cfg);
    return featurize(trials, cfg.method, cfg.bands, cfg.window_seconds, cfg.scheme, cfg);
}

EvaluationReport run_experiment(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<Recording> recordings;
    try {
        recordings = resolve_data(cfg);
    } catch (const std::exception& e) {
        throw std::runtime_error(stage("data", e.what()));
    }

    std::vector<LabeledWindow> windows;
    try {
        windows = build_windows(recordings, cfg);
    } catch (const std::exception& e) {
        throw std::runtime_error(stage("features", e.what()));
    }

    TrainedCell cell;
    try {
        cell = train_and_evaluate(cfg.method, windows, cfg.scheme, cfg.split, cfg.train);
    } catch (const std::exception& e) {
        throw std::runtime_error(stage("train", e.what()));
    }

    cell.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        const auto dir = std::filesystem::path(cfg.out_dir);
        write_report_json((dir / "report.json").string(), cell.report);
        // timing is volatile; kept out of report.json so reruns are byte-identical
        std::ofstream timing(dir / "report.timing.txt");
        timing << "wall_seconds=" << cell.report.wall_seconds << "\n";
    }
    return cell.report;
}

SweepResult run_sweep(const ExperimentConfig& base,
                      const std::vector<FeatureMethod>& methods,
                      const std::vector<BandSelection>& bands,
                      const std::vector<double>& window_sizes) {
    if (methods.empty() || bands.empty() || window_sizes.empty())
        throw std::invalid_argument("run_sweep: empty axis");

    const auto recordings = resolve_data(base);
    // DE is extracted once per (trial, smoothing) pair and shared by all cells
    const auto trials = prepare_trials(recordings, base);

    std::set<std::tuple<std::string, std::string, double>> seen;
    SweepResult result;
    for (const auto method : methods) {
        for (const auto& band : bands) {
            for (const double win : window_sizes) {
                if (!seen.insert({method_name(method), band.name(), win}).second)
                    continue;  // duplicate cell request
                SweepCell cell;
                cell.method = method_name(method);
                cell.band = band.name();
                cell.window_seconds = win;
                cell.seed = base.train.seed;
                try {
                    const auto windows =
                        featurize(trials, method, band, win, base.scheme, base);
                    const auto trained = train_and_evaluate(method, windows, base.scheme,
                                                            base.split, base.train);
                    cell.ok = true;
                    cell.accuracy = trained.report.accuracy;
                } catch (const std::exception& e) {
                    cell.ok = false;
                    cell.error = e.what();
                }
                result.cells.push_back(std::move(cell));
            }
        }
    }
    return result;
}

void write_report_json(const std::string& path, const EvaluationReport& report) {
    // consistency: accuracy must be recomputable from the confusion matrix
    std::size_t trace = 0, total = 0;
    for (std::size_t i = 0; i < report.confusion.size(); ++i)
        for (std::size_t j = 0; j < report.confusion[i].size(); ++j) {
            total += report.confusion[i][j];
            if (i == j) trace += report.confusion[i][j];
        }
    if (total == 0 ||
        std::fabs(report.accuracy - static_cast<double>(trace) / total) > 1e-12)
        throw std::logic_error("report: accuracy does not match confusion matrix");

    nlohmann::ordered_json j;
    j["accuracy"] = report.accuracy;
    j["confusion"] = report.confusion;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["seed"] = report.seed;
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (const auto& e : report.history)
        hist.push_back({{"loss", e.loss}, {"accuracy", e.accuracy}});
    j["history"] = hist;
    j["config"] = report.config_echo;

    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

void write_sweep_csv(const std::string& path, const SweepResult& result) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "method,band,window_s,accuracy,seed,status\n";
    for (const auto& c : result.cells) {
        out << c.method << "," << c.band << "," << c.window_seconds << ",";
        if (c.ok)
            out << std::fixed << std::setprecision(4) << c.accuracy
                << std::defaultfloat;
        else
            out << "NA";
        out << "," << c.seed << "," << (c.ok ? "ok" : "failed") << "\n";
    }
}

void write_sweep_curves(const std::string& dir, const SweepResult& result) {
    std::map<std::string, std::vector<const SweepCell*>> by_band;
    for (const auto& c : result.cells)
        if (c.ok) by_band[c.band].push_back(&c);
    for (auto& [band, cells] : by_band) {
        std::sort(cells.begin(), cells.end(), [](const SweepCell* a, const SweepCell* b) {
            return std::tie(a->method, a->window_seconds) <
                   std::tie(b->method, b->window_seconds);
        });
        const auto path = std::filesystem::path(dir) / ("curve_" + band + ".csv");
        std::ofstream out(path);
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
        out << "window_s,accuracy\n";
        for (const SweepCell* c : cells)
            out << c->window_seconds << "," << std::fixed << std::setprecision(4)
                << c->accuracy << std::defaultfloat << "\n";
    }
}

}  // namespace asmap
