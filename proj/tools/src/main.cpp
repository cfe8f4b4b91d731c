#include "dysfluency/errors.hpp"
#include "dysfluency/eval.hpp"
#include "dysfluency/pipeline.hpp"
#include "dysfluency/session_store.hpp"
#include "dysfluency/synthgen.hpp"
#include "dysfluency_tools/http_api.hpp"

#include <CLI11.hpp>

#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace dysfluency;

namespace {

enum Exit : int { kOk = 0, kUsage = 2, kIo = 3, kParse = 4, kInsufficientSpeech = 5, kInternal = 1 };

struct ConfigOptions {
    std::string path;
    std::vector<std::string> overrides;  // key=value
};

void add_config_options(CLI::App* cmd, ConfigOptions& opts) {
    cmd->add_option("-c,--config", opts.path, "JSON config file (default: $DYSFLUENCY_CONFIG)");
    cmd->add_option("--set", opts.overrides, "Override one config field, key=value (repeatable)");
}

RuleConfig resolve_config(const ConfigOptions& opts) {
    RuleConfig cfg;
    std::string path = opts.path;
    if (path.empty()) {
        if (const char* env = std::getenv("DYSFLUENCY_CONFIG"); env && *env) path = env;
    }
    if (!path.empty()) cfg = load_config(path);
    if (opts.overrides.empty()) return cfg;
    nlohmann::json patch = nlohmann::json::object();
    for (const auto& kv : opts.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
        const std::string value = kv.substr(eq + 1);
        try {
            patch[kv.substr(0, eq)] = nlohmann::json::parse(value);
        } catch (const nlohmann::json::parse_error&) {
            patch[kv.substr(0, eq)] = value;
        }
    }
    return config_from_json(patch, cfg);
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + out_path + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + out_path + "'");
}

std::string fixed(double v, int digits = 3) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

std::vector<AnnotationSet> load_sets(const std::string& path) {
    if (fs::path(path).extension() == ".json") {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError("'" + path + "' is not valid JSON: " + e.what());
        }
        std::vector<AnnotationSet> sets;
        for (const auto& r : j.is_array() ? j : nlohmann::json::array({j})) {
            sets.push_back(annotations_from_report(report_from_json(r)));
        }
        return sets;
    }
    return load_annotations(path);
}

WordAlignment load_alignment_arg(const std::string& path) {
    if (!fs::exists(path)) throw IoError("alignment file '" + path + "' does not exist");
    return load_alignment(path);
}

long peak_rss_kb() {
    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    return usage.ru_maxrss;
}

// ---- subcommands ---------------------------------------------------------------

struct DetectArgs {
    std::string audio, align, format = "json", out, id;
    ConfigOptions config;
};

int run_detect(const DetectArgs& a) {
    const RuleConfig cfg = resolve_config(a.config);
    const AudioBuffer audio = load_audio(a.audio);
    std::optional<WordAlignment> align;
    if (!a.align.empty()) align = load_alignment_arg(a.align);
    const std::string id = a.id.empty() ? fs::path(a.audio).stem().string() : a.id;
    const EventReport report = detect(audio, cfg, align ? &*align : nullptr, id);
    std::string text;
    if (a.format == "json") {
        text = report_to_json(report).dump(2) + "\n";
    } else if (a.format == "text") {
        text = report_to_text(report);
    } else {
        text = report_to_csv(report);
    }
    emit(text, a.out);
    return kOk;
}

struct CalibrateArgs {
    std::string audio, format = "json", out;
    ConfigOptions config;
};

int run_calibrate(const CalibrateArgs& a) {
    const RuleConfig cfg = resolve_config(a.config);
    const AudioBuffer audio = load_audio(a.audio);
    const Analysis analysis = analyze(audio, cfg);
    const RateEstimate est = analyze_speaking_rate(analysis.canonical.audio, analysis.vad, cfg);
    const double t_min = t_min_for_rate(cfg.alpha, est.rate);
    std::string text;
    if (a.format == "json") {
        const nlohmann::json fragment = {
            {"calibrated_speaking_rate", est.rate},
            {"_preview",
             {{"alpha", cfg.alpha}, {"t_min_s", t_min}, {"nuclei", est.nuclei}, {"speech_s", est.speech_s}}}};
        text = fragment.dump(2) + "\n";
    } else {
        text = "speaking_rate  " + fixed(est.rate, 2) + " syll/s (" + std::to_string(est.nuclei) + " nuclei in " +
               fixed(est.speech_s, 2) + " s of speech)\n" + "t_min          " + fixed(t_min) + " s (alpha " +
               fixed(cfg.alpha, 2) + ")\n";
    }
    emit(text, a.out);
    return kOk;
}

struct EvalArgs {
    std::string ref, hyp, format = "text", out;
    double iou = kDefaultIou;
    double clip = 0.0;
    double duration = 0.0;
};

int run_eval(const EvalArgs& a) {
    const auto refs = load_sets(a.ref);
    const auto hyps = load_sets(a.hyp);
    EvalReport report;
    if (a.clip > 0.0) {
        std::map<std::string, const AnnotationSet*> by_id;
        for (const auto& h : hyps) by_id[h.recording_id] = &h;
        report.iou_min = 0.0;
        for (const auto& r : refs) {
            const AnnotationSet empty{r.recording_id, {}};
            const auto it = by_id.find(r.recording_id);
            const AnnotationSet& h = it == by_id.end() ? empty : *it->second;
            double duration = a.duration;
            if (duration <= 0.0) {
                for (const auto& e : r.events) duration = std::max(duration, e.end_s);
                for (const auto& e : h.events) duration = std::max(duration, e.end_s);
            }
            const EvalReport one = score_clips(h, r, duration, a.clip);
            for (std::size_t k = 0; k < report.per_kind.size(); ++k) {
                report.per_kind[k].tp += one.per_kind[k].tp;
                report.per_kind[k].fp += one.per_kind[k].fp;
                report.per_kind[k].fn += one.per_kind[k].fn;
            }
            report.recordings++;
        }
        report.overall = {};
        for (auto& k : report.per_kind) {
            k.finish();
            report.overall.tp += k.tp;
            report.overall.fp += k.fp;
            report.overall.fn += k.fn;
        }
        report.overall.finish();
    } else {
        report = score_corpus(hyps, refs, a.iou);
    }
    std::string text;
    if (a.format == "json") {
        text = eval_to_json(report).dump(2) + "\n";
    } else if (a.format == "csv") {
        text = eval_to_csv(report);
    } else {
        text = eval_to_text(report);
    }
    emit(text, a.out);
    return kOk;
}

struct SynthArgs {
    std::string preset, spec, out_dir;
    std::uint64_t seed = 7;
    double time_scale = 1.0;
};

int run_synth(const SynthArgs& a) {
    std::vector<SynthSpec> specs = a.spec.empty() ? preset(a.preset, a.seed) : load_specs(a.spec);
    if (a.time_scale != 1.0) specs = with_time_scale(std::move(specs), a.time_scale);
    for (const auto& s : specs) s.validate();
    write_corpus(a.out_dir, specs);
    std::cerr << "wrote " << specs.size() << " utterances to " << a.out_dir << "\n";
    return kOk;
}

struct BenchArgs {
    std::string audio, format = "text", out;
    int repeat = 1;
    ConfigOptions config;
};

int run_bench(const BenchArgs& a) {
    const RuleConfig cfg = resolve_config(a.config);
    const AudioBuffer audio = load_audio(a.audio);
    double best = std::numeric_limits<double>::infinity();
    std::size_t events = 0;
    for (int r = 0; r < std::max(1, a.repeat); ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const EventReport report = detect(audio, cfg, nullptr, "bench");
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        events = report.events.size();
    }
    const double duration = audio.duration_s();
    const double ratio = duration > 0.0 ? best / duration : 0.0;
    const double rss_mb = static_cast<double>(peak_rss_kb()) / 1024.0;
    std::string text;
    if (a.format == "json") {
        text = nlohmann::json{{"audio_s", duration},
                              {"wall_s", best},
                              {"realtime_ratio", ratio},
                              {"peak_rss_mb", rss_mb},
                              {"events", events},
                              {"threads", 1}}
                   .dump(2) +
               "\n";
    } else {
        text = "audio       " + fixed(duration, 2) + " s\n" + "wall        " + fixed(best, 4) + " s\n" +
               "ratio       " + fixed(ratio, 4) + "x real time\n" + "peak rss    " + fixed(rss_mb, 1) + " MB\n" +
               "events      " + std::to_string(events) + "\n";
    }
    emit(text, a.out);
    return kOk;
}

struct SweepArgs {
    std::uint64_t seed = 7;
    std::size_t count = 40;
    std::vector<double> scales{0.5, 0.75, 1.0, 1.5, 2.0};
    std::string format = "text", out;
    ConfigOptions config;
};

int run_sweep(const SweepArgs& a) {
    const RuleConfig cfg = resolve_config(a.config);
    const auto rows = rate_sweep(rate_sweep_corpus(a.seed, a.count), a.scales, cfg);
    emit(a.format == "json" ? sweep_to_json(rows).dump(2) + "\n" : sweep_to_text(rows), a.out);
    return kOk;
}

struct FeaturesArgs {
    std::string audio, out_dir;
    ConfigOptions config;
};

int run_features(const FeaturesArgs& a) {
    const RuleConfig cfg = resolve_config(a.config);
    const Analysis analysis = analyze(load_audio(a.audio), cfg);
    if (!analysis.features) throw FormatError("'" + a.audio + "' is shorter than one analysis frame");
    fs::create_directories(a.out_dir);
    dump_features_csv(*analysis.features, a.out_dir);
    std::cerr << "wrote " << analysis.features->frame_count() << " frames to " << a.out_dir << "\n";
    return kOk;
}

struct ServeArgs {
    std::string root = "sessions", host = "127.0.0.1";
    int port = 8080;
    double max_upload_mb = 64.0;
};

int run_serve(const ServeArgs& a) {
    StoreOptions opts;
    opts.max_upload_bytes = static_cast<std::size_t>(a.max_upload_mb * 1024.0 * 1024.0);
    SessionStore store(a.root, opts);
    httplib::Server server;
    service::install_routes(server, store);
    std::cerr << "serving " << store.list().size() << " sessions from " << a.root << " on http://" << a.host << ":"
              << a.port << "\n";
    if (!server.listen(a.host, a.port)) throw IoError("cannot listen on " + a.host + ":" + std::to_string(a.port));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rule-based speech dysfluency detection"};
    app.require_subcommand(1);
    const std::vector<std::string> report_formats{"json", "text", "csv"};

    DetectArgs detect_args;
    auto* detect_cmd = app.add_subcommand("detect", "Detect dysfluencies in a WAV file");
    detect_cmd->add_option("audio", detect_args.audio, "Input WAV")->required();
    detect_cmd->add_option("-a,--align", detect_args.align, "Word alignment (CSV or TextGrid)");
    detect_cmd->add_option("-f,--format", detect_args.format)->check(CLI::IsMember(report_formats));
    detect_cmd->add_option("-o,--output", detect_args.out, "Output file (default stdout)");
    detect_cmd->add_option("--id", detect_args.id, "Recording id (default: file stem)");
    add_config_options(detect_cmd, detect_args.config);

    CalibrateArgs calibrate_args;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Estimate a speaker's baseline speaking rate");
    calibrate_cmd->add_option("audio", calibrate_args.audio, "Baseline WAV")->required();
    calibrate_cmd->add_option("-f,--format", calibrate_args.format)->check(CLI::IsMember({"json", "text"}));
    calibrate_cmd->add_option("-o,--output", calibrate_args.out);
    add_config_options(calibrate_cmd, calibrate_args.config);

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Score hypotheses against reference annotations");
    eval_cmd->add_option("ref", eval_args.ref, "Reference annotation CSV")->required();
    eval_cmd->add_option("hyp", eval_args.hyp, "Hypothesis annotation CSV or report JSON")->required();
    eval_cmd->add_option("--iou", eval_args.iou, "Minimum IoU for a match")->check(CLI::Range(0.0, 1.0));
    eval_cmd->add_option("--clip", eval_args.clip, "Score fixed-length clips of this many seconds instead");
    eval_cmd->add_option("--duration", eval_args.duration, "Recording duration for clip mode");
    eval_cmd->add_option("-f,--format", eval_args.format)->check(CLI::IsMember({"text", "json", "csv"}));
    eval_cmd->add_option("-o,--output", eval_args.out);

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic annotated corpus");
    auto* preset_opt = synth_cmd->add_option("-p,--preset", synth_args.preset, "standard-200, rate-sweep or trace");
    auto* spec_opt = synth_cmd->add_option("-s,--spec", synth_args.spec, "JSON spec file");
    preset_opt->excludes(spec_opt);
    synth_cmd->add_option("--seed", synth_args.seed);
    synth_cmd->add_option("--time-scale", synth_args.time_scale)->check(CLI::PositiveNumber);
    synth_cmd->add_option("-o,--output", synth_args.out_dir, "Output directory")->required();

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Time the full pipeline on one file (single thread)");
    bench_cmd->add_option("audio", bench_args.audio)->required();
    bench_cmd->add_option("--repeat", bench_args.repeat, "Runs; the fastest is reported")->check(CLI::PositiveNumber);
    bench_cmd->add_option("-f,--format", bench_args.format)->check(CLI::IsMember({"text", "json"}));
    bench_cmd->add_option("-o,--output", bench_args.out);
    add_config_options(bench_cmd, bench_args.config);

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "Prolongation F1 across time scales, normalization on/off");
    sweep_cmd->add_option("--seed", sweep_args.seed);
    sweep_cmd->add_option("--count", sweep_args.count, "Utterances per scale");
    sweep_cmd->add_option("--scales", sweep_args.scales)->delimiter(',');
    sweep_cmd->add_option("-f,--format", sweep_args.format)->check(CLI::IsMember({"text", "json"}));
    sweep_cmd->add_option("-o,--output", sweep_args.out);
    add_config_options(sweep_cmd, sweep_args.config);

    FeaturesArgs features_args;
    auto* features_cmd = app.add_subcommand("features", "Dump every feature track as CSV");
    features_cmd->add_option("audio", features_args.audio)->required();
    features_cmd->add_option("-o,--output", features_args.out_dir, "Output directory")->required();
    add_config_options(features_cmd, features_args.config);

    ServeArgs serve_args;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP session service");
    serve_cmd->add_option("--root", serve_args.root, "Session storage directory");
    serve_cmd->add_option("--host", serve_args.host);
    serve_cmd->add_option("--port", serve_args.port);
    serve_cmd->add_option("--max-upload-mb", serve_args.max_upload_mb)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }
    if (*synth_cmd && synth_args.preset.empty() && synth_args.spec.empty()) {
        std::cerr << "synth: one of --preset or --spec is required\n";
        return kUsage;
    }

    try {
        if (*detect_cmd) return run_detect(detect_args);
        if (*calibrate_cmd) return run_calibrate(calibrate_args);
        if (*eval_cmd) return run_eval(eval_args);
        if (*synth_cmd) return run_synth(synth_args);
        if (*bench_cmd) return run_bench(bench_args);
        if (*sweep_cmd) return run_sweep(sweep_args);
        if (*features_cmd) return run_features(features_args);
        if (*serve_cmd) return run_serve(serve_args);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const InsufficientSpeechError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInsufficientSpeech;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kParse;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    }
    return kUsage;
}
