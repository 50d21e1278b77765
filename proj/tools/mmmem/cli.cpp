#include "mmmem/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "mmmem/config.hpp"
#include "mmmem/error.hpp"
#include "mmmem/grpo.hpp"
#include "mmmem/ib.hpp"
#include "mmmem/media_io.hpp"
#include "mmmem/pipeline.hpp"
#include "mmmem/remote.hpp"
#include "mmmem/retrieval.hpp"
#include "mmmem/store.hpp"
#include "mmmem/text.hpp"

namespace mmmem::cli {

namespace fs = std::filesystem;

namespace {

// Thrown for usage problems detected after flag parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Shape:
        case ErrorKind::Contract:
        case ErrorKind::Domain:
        case ErrorKind::Parse:
            return kExitUsage;
        case ErrorKind::Adapter:
        case ErrorKind::Transport:
        case ErrorKind::Protocol:
            return kExitAdapter;
        default:
            return kExitInternal;
    }
}

// Shortest round-trip form, always with a decimal point or exponent.
std::string num(double v) {
    std::string s = format_double(v);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path)) throw UsageError(std::string("missing ") + what + " file: " + path);
}

EngineConfig config_from(const std::string& path) {
    if (path.empty()) return EngineConfig{};
    require_file(path, "config");
    return load_config(path);
}

std::shared_ptr<const RemoteClient> remote_client() {
    return std::make_shared<const RemoteClient>(RemoteConfig::from_env());
}

AdapterSet adapters_for(const std::string& kind, std::size_t dim, std::uint64_t seed, double scorer_scale) {
    if (kind == "stub") {
        AdapterSet a = make_stub_adapters(dim, seed);
        a.scorer = std::make_shared<OverlapScorer>(scorer_scale);
        return a;
    }
    auto client = remote_client();
    AdapterSet a;
    a.embedder = std::make_shared<RemoteEmbedder>(client, dim);
    a.captioner = std::make_shared<RemoteCaptioner>(client);
    a.extractor = std::make_shared<RemoteExtractor>(client);
    a.scorer = std::make_shared<RemoteScorer>(client);
    return a;
}

MemoryPyramid load_snapshot(const std::string& dir) {
    if (!fs::is_directory(dir)) throw UsageError("missing snapshot directory: " + dir);
    try {
        return load_memory(dir);
    } catch (const Error& e) {
        // A snapshot that will not load is bad input to the calling command.
        if (e.kind() == ErrorKind::Io || e.kind() == ErrorKind::Corruption || e.kind() == ErrorKind::Consistency) {
            throw UsageError(std::string("bad snapshot: ") + e.what());
        }
        throw;
    }
}

// ---------------------------------------------------------------------------

struct BuildArgs {
    std::string frames, features, subtitles, out, config, adapters = "stub";
    std::optional<std::uint64_t> seed;
};

int cmd_build(const BuildArgs& a, std::ostream& out) {
    if (a.frames.empty() == a.features.empty()) throw UsageError("build: give exactly one of --frames or --features");
    const std::string input = a.frames.empty() ? a.features : a.frames;
    require_file(input, "input");
    if (!a.subtitles.empty()) require_file(a.subtitles, "subtitles");
    EngineConfig config = config_from(a.config);
    if (a.seed) config.seed = *a.seed;

    std::vector<Frame> frames = a.frames.empty() ? read_feature_records(a.features) : read_frame_dump(a.frames);
    std::optional<SubtitleTrack> subs;
    if (!a.subtitles.empty()) subs = read_subtitles(a.subtitles);
    const auto clips = segment_fixed(std::move(frames), config.segment_frames);

    const AdapterSet adapters = adapters_for(a.adapters, config.embed_dim, config.seed, config.scorer_scale);
    MemoryPyramid p = build_pyramid(clips, config, adapters, subs ? &*subs : nullptr);
    p.build_config["adapters"] = a.adapters;
    const Manifest m = save_memory(p, a.out);

    const auto prototypes = std::count_if(p.episodic.stream.begin(), p.episodic.stream.end(),
                                          [](const EpisodicNode& n) { return n.is_prototype; });
    out << "layer=sensory clips=" << clips.size() << " items=" << p.sensory.size() << '\n'
        << "layer=episodic nodes=" << p.episodic.stream.size() << " prototypes=" << prototypes
        << " actions=" << p.episodic.action_log.size() << '\n'
        << "layer=symbolic concepts=" << p.schema.concepts.size() << " edges=" << p.schema.edges.size() << '\n'
        << "sensory=" << m.sensory_count << " episodic=" << m.episodic_count << " concepts=" << m.concept_count
        << '\n';
    return kExitOk;
}

struct QueryArgs {
    std::string mem, question, trace, config, scorer = "overlap";
    std::vector<std::string> choices;
};

int cmd_query(const QueryArgs& a, std::ostream& out) {
    if (a.choices.size() < 2) throw UsageError("query: at least two --choice values are required");
    const EngineConfig config = config_from(a.config);
    const MemoryPyramid p = load_snapshot(a.mem);

    const auto it = p.build_config.find("adapters");
    const std::string embed_kind = it == p.build_config.end() ? "stub" : it->second;
    const AdapterSet adapters = adapters_for(embed_kind, p.dimension, p.seed, config.scorer_scale);
    std::shared_ptr<const CandidateScorer> scorer;
    if (a.scorer == "overlap") {
        scorer = std::make_shared<OverlapScorer>(config.scorer_scale);
    } else if (a.scorer == "uniform") {
        scorer = std::make_shared<UniformScorer>();
    } else {
        scorer = std::make_shared<RemoteScorer>(remote_client());
    }

    const Query q{a.question, a.choices};
    const AnswerResult r = answer(q, p, *adapters.embedder, *scorer, config.retrieval);
    if (!a.trace.empty()) {
        std::ofstream t(a.trace);
        if (!t) throw IoError("cannot write trace " + a.trace);
        write_trace(t, r);
        if (!t) throw IoError("write failed: " + a.trace);
    }
    const std::string decision = r.trace.empty() ? "none" : to_string(r.trace.back().decision);
    out << "index=" << r.index << " letter=" << r.letter << " steps=" << r.trace.size()
        << " entropy=" << num(r.posterior.entropy_history.back()) << " stop=" << decision << '\n'
        << "answer=" << r.answer << '\n';
    return kExitOk;
}

struct VerifyArgs {
    std::size_t instances = 500;
    std::uint64_t seed = 7;
    std::string file;
    std::string builtin;
};

int cmd_verify_ib(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
    if (a.instances < 1) throw UsageError("verify-ib: --instances must be >= 1");
    std::vector<IbInstance> batch;
    if (!a.file.empty()) {
        require_file(a.file, "instance");
        std::ifstream in(a.file);
        batch.push_back(read_instance(in));
    } else if (!a.builtin.empty()) {
        if (a.builtin != "chain") throw UsageError("verify-ib: unknown builtin '" + a.builtin + "'");
        for (std::size_t i = 0; i < a.instances; ++i) batch.push_back(deterministic_chain_instance());
    } else {
        std::mt19937_64 rng(a.seed);
        for (std::size_t i = 0; i < a.instances; ++i) batch.push_back(random_instance(rng));
    }

    constexpr double kTol = -1e-9;
    double worst_pred = std::numeric_limits<double>::infinity();
    double worst_comp = std::numeric_limits<double>::infinity();
    std::size_t unbounded = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const BoundReport r = verify_bounds(batch[i]);
        if (r.lp_unbounded) ++unbounded;
        worst_pred = std::min(worst_pred, r.slack_pred);
        worst_comp = std::min(worst_comp, r.slack_comp);
        if (r.slack_pred < kTol || r.slack_comp < kTol) {
            err << "bound violated on instance " << i << ":\n";
            write_instance(err, batch[i]);
            write_bound_report(err, r);
            out << "instances=" << i + 1 << " status=violated\n";
            return kExitInternal;
        }
    }
    out << "instances=" << batch.size() << " worst_slack_pred=" << num(worst_pred)
        << " worst_slack_comp=" << num(worst_comp) << " unbounded_lp=" << unbounded << " status=ok\n";
    return kExitOk;
}

struct TrainArgs {
    std::string config, report, checkpoint;
    std::optional<std::uint64_t> seed;
};

int cmd_train_toy(const TrainArgs& a, std::ostream& out) {
    EngineConfig config = config_from(a.config);
    if (a.seed) config.seed = *a.seed;
    const TrainingReport report = train_toy(config.policy, config.toy, config.seed);

    std::ostringstream text;
    write_training_report(text, report, config.policy);
    {
        std::ofstream f(a.report);
        if (!f) throw IoError("cannot write report " + a.report);
        f << text.str();
        if (!f) throw IoError("write failed: " + a.report);
    }
    fs::path ckpt = a.checkpoint;
    if (ckpt.empty()) ckpt = fs::path(a.report).replace_extension(".mmpo");
    save_checkpoint(ckpt, report.policy);

    const double first = report.epochs.empty() ? 0.0 : report.epochs.front().mean_reward;
    const double last = report.epochs.empty() ? 0.0 : report.epochs.back().mean_reward;
    out << "epochs=" << report.epochs.size() << " epoch0_mean_reward=" << num(first)
        << " final_mean_reward=" << num(last) << '\n'
        << "baseline_task_reward=" << num(report.initial.mean_task_reward)
        << " final_task_reward=" << num(report.final.mean_task_reward)
        << " final_mean_length=" << num(report.final.mean_length) << '\n'
        << "checkpoint=" << ckpt.string() << '\n';
    return kExitOk;
}

int cmd_stats(const std::string& mem, std::ostream& out) {
    const MemoryPyramid p = load_snapshot(mem);
    const auto& stream = p.episodic.stream;
    double merge_factor = 0.0;
    std::size_t prototypes = 0;
    for (const auto& n : stream) {
        merge_factor += n.merged_count;
        prototypes += n.is_prototype ? 1 : 0;
    }
    if (!stream.empty()) merge_factor /= static_cast<double>(stream.size());
    std::map<Action, std::size_t> actions{{Action::AddNew, 0}, {Action::Merge, 0}, {Action::Discard, 0}};
    for (Action act : p.episodic.action_log) ++actions[act];

    std::map<std::string, std::size_t> degree;
    for (const auto& [id, c] : p.schema.concepts) degree[id] = 0;
    for (const auto& e : p.schema.edges) {
        ++degree[e.to_concept];
        if (e.kind == EdgeKind::Semantic) ++degree[e.from_concept];
    }
    std::map<std::size_t, std::size_t> histogram;
    for (const auto& [id, d] : degree) ++histogram[d];

    out << "sensory=" << p.sensory.size() << " episodic=" << stream.size() << " concepts=" << p.schema.concepts.size()
        << " edges=" << p.schema.edges.size() << '\n'
        << "prototypes=" << prototypes << " mean_merge_factor=" << num(merge_factor) << '\n'
        << "add_new=" << actions[Action::AddNew] << " merge=" << actions[Action::Merge]
        << " discard=" << actions[Action::Discard] << '\n'
        << "grounding_edges=" << p.schema.grounding_edge_count()
        << " semantic_edges=" << p.schema.semantic_edge_count() << '\n'
        << "degree_histogram=";
    bool first = true;
    for (const auto& [d, count] : histogram) {
        out << (first ? "" : ",") << d << ':' << count;
        first = false;
    }
    out << '\n';
    return kExitOk;
}

int cmd_export_graph(const std::string& mem, const std::string& out_dir, std::ostream& out) {
    const MemoryPyramid p = load_snapshot(mem);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    auto write = [&](const fs::path& path, auto&& fn) {
        std::ofstream f(path);
        if (!f) throw IoError("cannot write " + path.string());
        fn(f);
        if (!f) throw IoError("write failed: " + path.string());
    };
    write(fs::path(out_dir) / "schema.rec", [&](std::ostream& f) { write_schema_records(f, p.schema); });
    write(fs::path(out_dir) / "edges.tsv", [&](std::ostream& f) { write_edge_list(f, p.schema); });
    out << "concepts=" << p.schema.concepts.size() << " edges=" << p.schema.edges.size() << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"mmmem: hierarchical multimodal memory engine"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    BuildArgs build;
    auto* b = app.add_subcommand("build", "Build a memory snapshot from frames or features");
    b->add_option("--frames", build.frames, "Binary frame dump");
    b->add_option("--features", build.features, "Feature records (ts<TAB>v0 v1 ...)");
    b->add_option("--subtitles", build.subtitles, "Subtitle track (start_ms<TAB>end_ms<TAB>text)");
    b->add_option("--out", build.out, "Snapshot directory")->required();
    b->add_option("--config", build.config, "Engine config file");
    b->add_option("--seed", build.seed, "Override the config seed");
    b->add_option("--adapters", build.adapters, "stub or remote")->check(CLI::IsMember({"stub", "remote"}));

    QueryArgs query;
    auto* q = app.add_subcommand("query", "Answer a multiple-choice question against a snapshot");
    q->add_option("--mem", query.mem, "Snapshot directory")->required();
    q->add_option("--question", query.question, "Question text")->required();
    q->add_option("--choice", query.choices, "Candidate answer (repeat)")->take_all();
    q->add_option("--trace", query.trace, "Write the retrieval trace here");
    q->add_option("--config", query.config, "Engine config file");
    q->add_option("--scorer", query.scorer, "overlap, uniform or remote")
        ->check(CLI::IsMember({"overlap", "uniform", "remote"}));

    VerifyArgs verify;
    auto* v = app.add_subcommand("verify-ib", "Check both variational bounds on finite instances");
    v->add_option("--instances", verify.instances, "Number of instances");
    v->add_option("--seed", verify.seed, "Instance generator seed");
    v->add_option("--file", verify.file, "Verify a single instance file");
    v->add_option("--builtin", verify.builtin, "Built-in instance: chain");

    TrainArgs train;
    auto* t = app.add_subcommand("train-toy", "Train the toy trace policy on the planted-keyword task");
    t->add_option("--config", train.config, "Engine config file");
    t->add_option("--seed", train.seed, "Override the config seed");
    t->add_option("--report", train.report, "Training report (JSON lines)")->required();
    t->add_option("--checkpoint", train.checkpoint, "Checkpoint path (default: report with .mmpo)");

    std::string stats_mem;
    auto* s = app.add_subcommand("stats", "Print snapshot statistics");
    s->add_option("--mem", stats_mem, "Snapshot directory")->required();

    std::string export_mem, export_out;
    auto* e = app.add_subcommand("export-graph", "Export the schema graph");
    e->add_option("--mem", export_mem, "Snapshot directory")->required();
    e->add_option("--out", export_out, "Output directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (b->parsed()) return cmd_build(build, out);
        if (q->parsed()) return cmd_query(query, out);
        if (v->parsed()) return cmd_verify_ib(verify, out, err);
        if (t->parsed()) return cmd_train_toy(train, out);
        if (s->parsed()) return cmd_stats(stats_mem, out);
        if (e->parsed()) return cmd_export_graph(export_mem, export_out, out);
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitUsage;
    } catch (const ProtocolError& ex) {
        err << "error: " << ex.what() << "\nraw response: " << ex.raw_body() << '\n';
        return kExitAdapter;
    } catch (const Error& ex) {
        err << "error (" << to_string(ex.kind()) << "): " << ex.what() << '\n';
        return exit_code_for(ex.kind());
    } catch (const std::exception& ex) {
        err << "internal error: " << ex.what() << '\n';
        return kExitInternal;
    }
    return kExitUsage;
}

}  // namespace mmmem::cli
