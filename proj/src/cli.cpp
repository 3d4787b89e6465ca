#include "metalert/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "metalert/aggregation.hpp"
#include "metalert/core.hpp"
#include "metalert/ingest.hpp"
#include "metalert/learning.hpp"
#include "metalert/simulator.hpp"
#include "metalert/store.hpp"
#include "metalert/verification.hpp"

namespace metalert::cli {

using ordered_json = nlohmann::ordered_json;

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cli/io-error", "cannot open '" + path + "'");
    return in;
}

core::Registry registry_from(const std::string& path) {
    return store::load_registry(path);
}

std::vector<core::AlertSession> events_from(const std::string& path,
                                            const core::Registry& registry) {
    auto in = open_input(path);
    return ingest::parse_events(in, registry, ingest::ParseMode::Strict).sessions;
}

void print_rate_table(const learning::RateTable& table, std::ostream& out) {
    out << std::left << std::setw(12) << "sensor" << " | " << std::setw(10) << "scope" << " | "
        << std::setw(8) << "rtp" << " | " << std::setw(8) << "rfn" << " | " << std::setw(8)
        << "rtn" << " | " << std::setw(8) << "pm" << "\n";
    out << std::string(68, '-') << "\n";
    out << std::fixed << std::setprecision(6);
    for (const auto& e : table.entries()) {
        out << std::left << std::setw(12) << e.sensor_id << " | " << std::setw(10)
            << (e.signature_id ? *e.signature_id : e.protocol_id) << " | " << e.rtp << " | "
            << e.rfn << " | " << e.rtn << " | " << e.pm << "\n";
    }
    out.unsetf(std::ios::fixed);
    out << std::setprecision(6);
}

struct TaggedCounts {
    std::size_t real = 0, fake = 0, pending = 0;
    sim::Confusion confusion;
    std::size_t labeled = 0;
};

TaggedCounts tally(std::span<const core::MetaAlert> metas) {
    TaggedCounts t;
    for (const auto& m : metas) {
        switch (m.tag) {
            case core::Tag::Real: ++t.real; break;
            case core::Tag::False: ++t.fake; break;
            default: ++t.pending; break;
        }
        if (!m.label || m.tag == core::Tag::Pending) continue;
        ++t.labeled;
        const bool malicious = *m.label == core::Label::Malicious;
        const bool real = m.tag == core::Tag::Real;
        if (real && malicious) ++t.confusion.tp;
        if (real && !malicious) ++t.confusion.fp;
        if (!real && malicious) ++t.confusion.fn;
        if (!real && !malicious) ++t.confusion.tn;
    }
    return t;
}

void write_chart(const std::filesystem::path& path,
                 const std::map<std::string, std::vector<double>>& histories) {
    const int width = 800, height = 400, margin = 50;
    std::size_t max_len = 1;
    double max_pi = 1e-9;
    for (const auto& [_, h] : histories) {
        max_len = std::max(max_len, h.size());
        for (double v : h) max_pi = std::max(max_pi, v);
    }

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    svg << "<line x1='" << margin << "' y1='" << height - margin << "' x2='" << width - margin
        << "' y2='" << height - margin << "' stroke='black'/>\n";
    svg << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
        << height - margin << "' stroke='black'/>\n";
    svg << "<text x='" << width / 2 << "' y='" << height - 10
        << "' font-size='12'>iteration</text>\n";
    svg << "<text x='10' y='" << margin - 10 << "' font-size='12'>performance index</text>\n";

    const char* colors[] = {"steelblue", "crimson", "seagreen", "darkorange", "purple"};
    int color = 0;
    for (const auto& [signature, history] : histories) {
        if (history.empty()) continue;
        svg << "<polyline fill='none' stroke='" << colors[color % 5] << "' points='";
        for (std::size_t i = 0; i < history.size(); ++i) {
            const double x = margin + (width - 2.0 * margin) * static_cast<double>(i) /
                                          static_cast<double>(std::max<std::size_t>(max_len - 1, 1));
            const double y =
                height - margin - (height - 2.0 * margin) * (history[i] / max_pi);
            svg << x << ',' << y << ' ';
        }
        svg << "'/>\n<text x='" << width - margin + 2 << "' y='" << margin + 14 * color
            << "' font-size='11' fill='" << colors[color % 5] << "'>" << signature << "</text>\n";
        ++color;
    }
    svg << "</svg>\n";
    store::write_atomic(path, svg.str());
}

struct TrainFlags {
    std::string events, summary, registry, store_dir;
    double lr = 0.5, momentum = 0.7, goal = 0.02, window = 5.0;
    int max_iter = 20000;
    std::uint64_t seed = 1;
};

int run_train(const TrainFlags& flags, bool train_perceptrons) {
    const core::Registry registry = registry_from(flags.registry);
    const auto events = events_from(flags.events, registry);
    auto summary_in = open_input(flags.summary);
    const ingest::TrafficSummary summary = ingest::read_summary(summary_in, registry);

    learning::RateComputation rates = learning::compute_rates(events, summary, registry);
    for (const auto& w : rates.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "rates:\n";
    print_rate_table(rates.table, std::cout);

    store::StoreLayout layout{flags.store_dir};
    store::ensure_layout(layout);
    store::save_registry(registry, layout.registry_file());
    store::save_rates(rates.table, layout);

    if (!train_perceptrons) return 0;

    aggregation::AggregationConfig agg_config;
    agg_config.time_window_s = flags.window;
    agg_config.close_timeout_s = std::max(flags.window, agg_config.close_timeout_s);
    const auto metas = aggregation::aggregate(events, registry, agg_config);
    store::save_metas(metas, layout.metas_dir() / "aggregated.jsonl");
    const double reduction =
        events.empty() ? 0.0 : aggregation::reduction_ratio(events.size(), metas.size());
    std::cout << events.size() << " alerts -> " << metas.size() << " meta-alerts (reduction "
              << reduction << "%)\n";

    const auto patterns = learning::build_training_patterns(metas, rates.table, registry);

    core::TrainConfig config;
    config.learning_rate = flags.lr;
    config.momentum = flags.momentum;
    config.goal = flags.goal;
    config.max_iterations = flags.max_iter;
    config.seed = flags.seed;

    ordered_json run;
    run["events"] = events.size();
    run["metas"] = metas.size();
    run["reduction"] = reduction;
    run["signatures"] = ordered_json::object();
    for (const auto& [signature, list] : patterns) {
        const learning::TrainOutcome outcome =
            learning::train_signature(signature, list, config);
        store::save_weights({outcome.weights, store::current_timestamp(), config}, layout);
        store::save_history(signature, outcome.history, layout);
        std::cout << "signature " << signature << ": " << list.size() << " patterns, "
                  << outcome.history.size() << " iterations, final performance index "
                  << outcome.history.back() << (outcome.reached_goal ? "" : " (goal not met)")
                  << "\n";
        run["signatures"][signature] = {{"patterns", list.size()},
                                        {"iterations", outcome.history.size()},
                                        {"final_pi", outcome.history.back()},
                                        {"reached_goal", outcome.reached_goal}};
    }
    if (patterns.empty())
        std::cout << "no incomplete meta-alerts; nothing to train\n";
    store::write_atomic(layout.run_file(), run.dump(2) + "\n");
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Sensor-fusion engine for intrusion alerts: aggregation, Bayesian "
                 "credibility, per-signature perceptron verification"};
    app.require_subcommand(1);
    // Top-level --help expands every subcommand's flags.
    app.set_help_flag();
    app.set_help_all_flag("-h,--help", "Print help for all subcommands");

    const char* env_store = std::getenv("METALERT_STORE");
    const std::string default_store = env_store ? env_store : "";

    // -- simulate ---------------------------------------------------------
    auto* cmd_sim = app.add_subcommand("simulate", "Generate labeled synthetic sensor traffic");
    std::string sim_config_path, sim_registry, sim_out_events, sim_out_summary, sim_out_truth;
    cmd_sim->add_option("--config", sim_config_path, "Simulation config file")->required();
    cmd_sim->add_option("--registry", sim_registry, "Registry file")->required();
    cmd_sim->add_option("--out-events", sim_out_events, "Output event file")->required();
    cmd_sim->add_option("--out-summary", sim_out_summary, "Output traffic summary")->required();
    cmd_sim->add_option("--out-truth", sim_out_truth, "Optional ground-truth trace file");

    // -- aggregate --------------------------------------------------------
    auto* cmd_agg = app.add_subcommand("aggregate", "Group alert sessions into meta-alerts");
    std::string agg_events, agg_registry, agg_out;
    double agg_window = 5.0, agg_timeout = 60.0;
    cmd_agg->add_option("--events", agg_events, "Event file")->required();
    cmd_agg->add_option("--registry", agg_registry, "Registry file")->required();
    cmd_agg->add_option("--window", agg_window, "Merge window in seconds");
    cmd_agg->add_option("--close-timeout", agg_timeout, "Close timeout in seconds");
    cmd_agg->add_option("--out", agg_out, "Output meta-alert file")->required();

    // -- rates ------------------------------------------------------------
    auto* cmd_rates = app.add_subcommand("rates", "Compute historical sensor rates");
    TrainFlags rate_flags;
    rate_flags.store_dir = default_store;
    cmd_rates->add_option("--events", rate_flags.events, "Labeled event file")->required();
    cmd_rates->add_option("--summary", rate_flags.summary, "Traffic summary file")->required();
    cmd_rates->add_option("--registry", rate_flags.registry, "Registry file")->required();
    cmd_rates->add_option("--store", rate_flags.store_dir, "Framework store directory");

    // -- train ------------------------------------------------------------
    auto* cmd_train = app.add_subcommand(
        "train", "Training phase: rates, aggregation, per-signature perceptrons");
    TrainFlags train_flags;
    train_flags.store_dir = default_store;
    cmd_train->add_option("--events", train_flags.events, "Labeled event file")->required();
    cmd_train->add_option("--summary", train_flags.summary, "Traffic summary file")->required();
    cmd_train->add_option("--registry", train_flags.registry, "Registry file")->required();
    cmd_train->add_option("--store", train_flags.store_dir, "Framework store directory");
    cmd_train->add_option("--window", train_flags.window, "Aggregation window in seconds");
    cmd_train->add_option("--lr", train_flags.lr, "Learning rate");
    cmd_train->add_option("--momentum", train_flags.momentum, "Momentum");
    cmd_train->add_option("--goal", train_flags.goal, "Performance-index goal");
    cmd_train->add_option("--max-iter", train_flags.max_iter, "Iteration cap");
    cmd_train->add_option("--seed", train_flags.seed, "Weight initialization seed");

    // -- verify -----------------------------------------------------------
    auto* cmd_verify = app.add_subcommand("verify", "Real-time phase: tag meta-alerts");
    std::string ver_metas, ver_registry, ver_rates, ver_weights, ver_out,
        ver_store = default_store;
    cmd_verify->add_option("--metas", ver_metas, "Meta-alert file to classify")->required();
    cmd_verify->add_option("--registry", ver_registry, "Registry file");
    cmd_verify->add_option("--rates", ver_rates, "Rates directory");
    cmd_verify->add_option("--weights", ver_weights, "Weights directory");
    cmd_verify->add_option("--store", ver_store, "Framework store directory");
    cmd_verify->add_option("--out", ver_out, "Output tagged meta-alert file")->required();

    // -- report -----------------------------------------------------------
    auto* cmd_report = app.add_subcommand("report", "Summarize the framework store");
    std::string rep_store = default_store, rep_chart;
    cmd_report->add_option("--store", rep_store, "Framework store directory");
    cmd_report->add_option("--chart", rep_chart, "Write an SVG convergence chart");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*cmd_sim) {
            const core::Registry registry = registry_from(sim_registry);
            auto config_in = open_input(sim_config_path);
            const sim::SimConfig config = sim::read_sim_config(config_in);
            const sim::SimOutput output = sim::generate(config, registry);

            std::ostringstream events;
            ingest::serialize_events(output.events, events);
            store::write_atomic(sim_out_events, events.str());

            std::ostringstream summary;
            ingest::write_summary(output.summary, summary);
            store::write_atomic(sim_out_summary, summary.str());

            if (!sim_out_truth.empty()) {
                std::ostringstream truth;
                for (const auto& t : output.truth) {
                    ordered_json j;
                    j["index"] = t.index;
                    j["ts"] = core::format_timestamp(t.timestamp);
                    j["src_ip"] = t.socket.src_ip;
                    j["src_port"] = t.socket.src_port;
                    j["label"] = core::to_string(t.label);
                    j["alerted"] = t.alerted;
                    truth << j.dump() << '\n';
                }
                store::write_atomic(sim_out_truth, truth.str());
            }
            std::cout << "generated " << output.events.size() << " events over "
                      << output.truth.size() << " traces\n";
            return 0;
        }

        if (*cmd_agg) {
            const core::Registry registry = registry_from(agg_registry);
            const auto events = events_from(agg_events, registry);
            aggregation::AggregationConfig config;
            config.time_window_s = agg_window;
            config.close_timeout_s = std::max(agg_timeout, agg_window);
            const auto metas = aggregation::aggregate(events, registry, config);
            store::save_metas(metas, agg_out);
            std::cout << events.size() << " alerts -> " << metas.size() << " meta-alerts";
            if (!events.empty())
                std::cout << " (reduction "
                          << aggregation::reduction_ratio(events.size(), metas.size()) << "%)";
            std::cout << "\n";
            return 0;
        }

        if (*cmd_rates) {
            if (rate_flags.store_dir.empty()) {
                // Print-only when no store is configured.
                const core::Registry registry = registry_from(rate_flags.registry);
                const auto events = events_from(rate_flags.events, registry);
                auto summary_in = open_input(rate_flags.summary);
                const auto summary = ingest::read_summary(summary_in, registry);
                auto rates = learning::compute_rates(events, summary, registry);
                for (const auto& w : rates.warnings) std::cerr << "warning: " << w << "\n";
                print_rate_table(rates.table, std::cout);
                return 0;
            }
            return run_train(rate_flags, /*train_perceptrons=*/false);
        }

        if (*cmd_train) {
            if (train_flags.store_dir.empty())
                throw Error("cli/missing-store",
                            "train needs --store or the METALERT_STORE environment variable");
            return run_train(train_flags, /*train_perceptrons=*/true);
        }

        if (*cmd_verify) {
            store::StoreLayout layout{ver_store};
            const std::string registry_path =
                !ver_registry.empty() ? ver_registry
                : !ver_store.empty() ? layout.registry_file().string()
                                     : throw Error("cli/missing-store",
                                                   "verify needs --registry or a store");
            const core::Registry registry = registry_from(registry_path);
            const learning::RateTable rates = store::load_rates_dir(
                !ver_rates.empty() ? ver_rates : layout.rates_dir().string());
            const auto weights = store::load_all_weights(
                !ver_weights.empty() ? ver_weights : layout.weights_dir().string());

            std::vector<core::MetaAlert> tagged;
            for (const auto& meta : store::load_metas(ver_metas))
                tagged.push_back(verification::classify(meta, rates, weights, registry));
            store::save_metas(tagged, ver_out);
            if (!ver_store.empty())
                store::save_metas(tagged, layout.metas_dir() / "tagged.jsonl");

            const TaggedCounts t = tally(tagged);
            std::cout << "classified " << tagged.size() << " meta-alerts: " << t.real
                      << " real, " << t.fake << " false\n";
            if (t.labeled > 0)
                std::cout << "against labels: tp=" << t.confusion.tp << " fp=" << t.confusion.fp
                          << " fn=" << t.confusion.fn << " tn=" << t.confusion.tn << "\n";
            return 0;
        }

        if (*cmd_report) {
            if (rep_store.empty())
                throw Error("cli/missing-store",
                            "report needs --store or the METALERT_STORE environment variable");
            store::StoreLayout layout{rep_store};
            namespace fs = std::filesystem;

            if (fs::exists(layout.run_file())) {
                std::ifstream in(layout.run_file());
                ordered_json run = ordered_json::parse(in);
                std::cout << "last training run: " << run.value("events", 0) << " alerts -> "
                          << run.value("metas", 0) << " meta-alerts (reduction "
                          << run.value("reduction", 0.0) << "%)\n";
            }
            const learning::RateTable rates = store::load_rates(layout);
            if (!rates.empty()) {
                std::cout << "\nrates:\n";
                print_rate_table(rates, std::cout);
            }

            std::map<std::string, std::vector<double>> histories;
            if (fs::exists(layout.history_dir())) {
                for (const auto& entry : fs::directory_iterator(layout.history_dir())) {
                    if (entry.path().extension() != ".txt") continue;
                    const std::string signature = entry.path().stem().string();
                    histories[signature] = store::load_history(layout, signature);
                }
            }
            if (!histories.empty()) {
                std::cout << "\nconvergence:\n";
                for (const auto& [signature, history] : histories) {
                    if (history.empty()) continue;
                    std::cout << "  " << signature << ": " << history.size()
                              << " iterations, performance index " << history.front() << " -> "
                              << history.back() << "\n";
                }
            }

            const auto tagged_path = layout.metas_dir() / "tagged.jsonl";
            if (fs::exists(tagged_path)) {
                const auto metas = store::load_metas(tagged_path);
                const TaggedCounts t = tally(metas);
                std::cout << "\ntagged meta-alerts: " << metas.size() << " (" << t.real
                          << " real, " << t.fake << " false, " << t.pending << " pending)\n";
                if (t.labeled > 0)
                    std::cout << "confusion vs labels: tp=" << t.confusion.tp
                              << " fp=" << t.confusion.fp << " fn=" << t.confusion.fn
                              << " tn=" << t.confusion.tn << "\n";
            }

            if (!rep_chart.empty()) {
                write_chart(rep_chart, histories);
                std::cout << "\nwrote chart to " << rep_chart << "\n";
            }
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";  // what() carries the module code
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace metalert::cli
