// Command-line entry point. Exit codes: 0 success, 1 usage, 2 data error.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "formsim/commands.hpp"
#include "formsim/errors.hpp"
#include "formsim/service.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int serve(const formsim::GlobalOptions& global, const std::string& bind, double fps) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw formsim::ContractViolation("--bind expects host:port");
    const auto host = bind.substr(0, colon);
    const auto port_text = bind.substr(colon + 1);
    if (port_text.empty() || port_text.size() > 5 || port_text.find_first_not_of("0123456789") != std::string::npos ||
        std::stoi(port_text) > 65535)
        throw formsim::ContractViolation("--bind port must be a number in [0, 65535]");
    const int port = std::stoi(port_text);

    formsim::ServiceOptions options;
    options.animation_fps = fps;
    formsim::AnalyticsService service(global.store, options);
    formsim::HttpServer server(service);
    const int bound = server.bind(host, port);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::thread watcher([&] {
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
    });
    std::cout << fmt::format("serving {} on http://{}:{}/v1", global.store.string(), host, bound) << std::endl;
    server.listen();
    g_stop = true;
    watcher.join();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Formation detection and analytics for football tracking data"};
    app.require_subcommand(1);

    formsim::GlobalOptions global;
    std::string store = global.store.string();
    std::string templates;
    app.add_option("--store", store, "Project store directory")->capture_default_str();
    app.add_option("--templates", templates, "Template bank (default: the shipped bank)");
    app.add_option("--delta", global.delta, "FSIM tolerance radius")->capture_default_str();
    app.add_flag("--role-compensation,!--no-role-compensation", global.role_compensation,
                 "Per-frame role reassignment when building the VFS")
        ->capture_default_str();
    app.add_option("--seed", global.seed, "Random seed")->capture_default_str();

    formsim::IngestOptions ingest;
    std::string ingest_input;
    auto* ingest_cmd = app.add_subcommand("ingest", "Parse, normalize and segment a tracking file into the store");
    ingest_cmd->add_option("input", ingest_input, "Tracking file (.csv or .json)")->required();
    ingest_cmd->add_option("--team", ingest.team, "Observed team id")->required();

    formsim::ClassifyOptions classify;
    auto* classify_cmd = app.add_subcommand("classify", "Compute VFS and template rankings for every stored segment");
    classify_cmd->add_flag("--permissive", classify.permissive, "Accept rosters other than ten outfield players");

    formsim::EvaluateOptions evaluate;
    std::string annotations, report_dir;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score classifications against annotations");
    evaluate_cmd->add_option("--annotations", annotations, "Annotation file (default: the store's log)");
    evaluate_cmd->add_option("--out", report_dir, "Report directory (default: <store>/report)");

    auto* templates_cmd = app.add_subcommand("templates", "Template bank utilities");
    templates_cmd->require_subcommand(1);
    std::string validate_path;
    auto* validate_cmd = templates_cmd->add_subcommand("validate", "Check a bank and print its similarity table");
    validate_cmd->add_option("file", validate_path, "Template file (default: --templates or the shipped bank)");

    formsim::SynthOptions synth;
    std::string synth_out = ".", synth_format = "csv", schemes;
    std::vector<std::size_t> per_bucket;
    auto* synth_cmd = app.add_subcommand("synth", "Synthetic data");
    synth_cmd->require_subcommand(1);
    auto* generate_cmd = synth_cmd->add_subcommand("generate", "Write a synthetic match with ground truth");
    generate_cmd->add_option("--out", synth_out, "Output directory")->capture_default_str();
    generate_cmd->add_option("--match-id", synth.spec.match_id, "Match id")->capture_default_str();
    generate_cmd->add_option("--format", synth_format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    generate_cmd->add_option("--sigma", synth.spec.jitter_sigma, "Per-frame jitter, normalized units")
        ->capture_default_str();
    generate_cmd->add_option("--swap-probability", synth.spec.swap_probability, "Chance of a role swap per pair")
        ->capture_default_str();
    generate_cmd->add_option("--scripted-swaps", synth.spec.scripted_swaps, "Forced swaps per segment")
        ->capture_default_str();
    generate_cmd->add_option("--set-piece-probability", synth.spec.set_piece_probability,
                             "Chance of a set piece before a segment")
        ->capture_default_str();
    generate_cmd->add_option("--segments-per-bucket", per_bucket, "Segments per short, mid, long bucket")
        ->expected(3);
    generate_cmd->add_option("--schemes", schemes, "Comma-separated schemes, cycled (default: whole bank)");

    auto* serve_cmd = app.add_subcommand("serve", "Serve the /v1 HTTP API");
    std::string bind = "127.0.0.1:8080";
    double fps = 5.0;
    serve_cmd->add_option("--bind", bind, "host:port")->capture_default_str();
    serve_cmd->add_option("--fps", fps, "Animation frame rate")->capture_default_str();

    for (auto* sub : {ingest_cmd, classify_cmd, evaluate_cmd, templates_cmd, validate_cmd, synth_cmd, generate_cmd,
                      serve_cmd})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    global.store = store;
    global.templates = templates;
    try {
        if (*ingest_cmd) {
            ingest.input = ingest_input;
            formsim::run_ingest(global, ingest, std::cout);
        } else if (*classify_cmd) {
            formsim::run_classify(global, classify, std::cout);
        } else if (*evaluate_cmd) {
            evaluate.annotations = annotations;
            evaluate.out_dir = report_dir;
            formsim::run_evaluate(global, evaluate, std::cout, std::cerr);
        } else if (*validate_cmd) {
            if (!validate_path.empty()) global.templates = validate_path;
            formsim::run_templates_validate(global, std::cout);
        } else if (*generate_cmd) {
            synth.out_dir = synth_out;
            synth.format = synth_format == "json" ? formsim::TrackingFormat::JSON : formsim::TrackingFormat::CSV;
            if (!per_bucket.empty()) std::copy(per_bucket.begin(), per_bucket.end(), synth.spec.segments_per_bucket.begin());
            if (!schemes.empty()) {
                std::string item;
                for (char c : schemes + ",") {
                    if (c != ',') {
                        item += c;
                    } else if (!item.empty()) {
                        synth.spec.schemes.push_back(item);
                        item.clear();
                    }
                }
            }
            formsim::run_synth_generate(global, synth, std::cout);
        } else if (*serve_cmd) {
            return serve(global, bind, fps);
        }
    } catch (const formsim::ContractViolation& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
