#include "clearing/cli.hpp"

#include <csignal>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "clearing/control.hpp"
#include "clearing/datastore.hpp"
#include "clearing/detection_log.hpp"
#include "clearing/enhance.hpp"
#include "clearing/errors.hpp"
#include "clearing/imaging_io.hpp"
#include "clearing/pnm.hpp"
#include "clearing/service.hpp"
#include "clearing/simulate.hpp"
#include "clearing/spectral_io.hpp"
#include "clearing/stabilize.hpp"

namespace clearing {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    bool seed_given = false;
    int verbosity = 0;
    fs::path output_dir = ".";
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

fs::path output_path(const Globals& g, const fs::path& p) {
    if (p.is_absolute()) return p;
    fs::create_directories(g.output_dir);
    return g.output_dir / p;
}

json read_json(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_json(const Globals& g, const fs::path& path, const json& j) {
    const auto out = output_path(g, path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_file_atomic(out, j.dump(2) + "\n");
}

// "0.5,0.1" -> {0.5, 0.1}
std::pair<double, double> parse_pair(const std::string& s, const std::string& what) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw UsageError(what + " must be 'a,b'");
    try {
        const double a = std::stod(s.substr(0, comma));
        const double b = std::stod(s.substr(comma + 1));
        return {a, b};
    } catch (const std::logic_error&) {
        throw UsageError(what + " must be 'a,b' with numbers");
    }
}

std::vector<double> read_saplings(const fs::path& path) {
    auto j = read_json(path);
    if (j.is_object() && j.contains("validated")) j = j["validated"];
    if (!j.is_array()) throw FormatError(path.string() + ": expected an array of saplings");
    std::vector<double> out;
    for (const auto& s : j) out.push_back(validated_sapling_from_json(s).x_s_m);
    return out;
}

Connectivity parse_connectivity(int c) {
    if (c == 4) return Connectivity::four;
    if (c == 8) return Connectivity::eight;
    throw UsageError("--connectivity must be 4 or 8");
}

DatastoreService* g_serving = nullptr;

void stop_serving(int) {
    if (g_serving) g_serving->stop();
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Selective plant-clearing toolkit", "clearing"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Seed for randomized stages (overrides scenario seeds)");
    app.add_flag("-v,--verbose", g.verbosity, "Verbose progress on stderr; repeat for more");
    app.add_option("--output-dir", g.output_dir, "Directory for relative output paths")->capture_default_str();

    std::function<void()> action;

    // sam
    auto* sam = app.add_subcommand("sam", "Spectral angle classification of a cube or a single spectrum");
    std::string sam_cube, sam_lib, sam_out, sam_pixel, sam_labels_img, sam_scoring = "cosine";
    double sam_reject = kDefaultRejectAngle;
    unsigned sam_threads = 0;
    sam->add_option("--library", sam_lib, "Reference library JSON {label: [[...], ...]}")->required();
    auto* sam_cube_opt = sam->add_option("--cube", sam_cube, "Cube header JSON");
    sam->add_option("--pixel", sam_pixel, "Comma-separated spectrum to classify")->excludes(sam_cube_opt);
    sam->add_option("--reject", sam_reject, "Reject angle in radians (cosine mode)")->capture_default_str();
    sam->add_option("--scoring", sam_scoring, "cosine or dot")->check(CLI::IsMember({"cosine", "dot"}));
    sam->add_option("--threads", sam_threads, "Worker threads (0 = hardware)");
    sam->add_option("--out", sam_out, "Label map JSON");
    sam->add_option("--label-image", sam_labels_img, "PGM with label index + 1 (0 = REJECT)");
    sam->callback([&] {
        action = [&] {
            const auto lib = read_library(sam_lib);
            const auto scoring = sam_scoring == "dot" ? SamScoring::dot : SamScoring::cosine;
            if (!sam_pixel.empty()) {
                std::vector<double> values;
                std::stringstream ss(sam_pixel);
                for (std::string tok; std::getline(ss, tok, ',');) values.push_back(std::stod(tok));
                const auto r = sam_classify(Spectrum(values), lib, sam_reject, scoring);
                const json j{{"label", r.label ? json(*r.label) : json("REJECT")},
                             {"best_label", r.best_label},
                             {"best_angle", r.best_angle},
                             {"best_score", r.best_score}};
                if (sam_out.empty()) out << j.dump(2) << "\n";
                else write_json(g, sam_out, j);
                return;
            }
            if (sam_cube.empty()) throw UsageError("sam needs --cube or --pixel");
            const auto cube = read_cube(sam_cube);
            const auto map = classify_cube(cube, lib, sam_reject, scoring, sam_threads);
            if (!sam_out.empty()) write_json(g, sam_out, to_json(map));
            if (!sam_labels_img.empty()) {
                Gray8Image img(map.width, map.height);
                for (std::size_t i = 0; i < map.indices.size(); ++i) {
                    img.values()[i] = static_cast<std::uint8_t>(std::min(255, map.indices[i] + 1));
                }
                write_file_atomic(output_path(g, sam_labels_img), encode_pgm(img));
            }
            std::map<std::string, long> counts;
            for (int idx : map.indices) counts[idx == LabelMap::kReject ? "REJECT" : map.labels[idx]]++;
            out << "classified " << map.indices.size() << " pixels:";
            for (const auto& [label, n] : counts) out << " " << label << "=" << n;
            out << "\n";
        };
    });

    // clahe
    auto* cl = app.add_subcommand("clahe", "Contrast-limited adaptive histogram equalization of a PNM image");
    std::string cl_in, cl_out;
    ClaheParams cl_params;
    cl->add_option("--in", cl_in, "Input PGM/PPM")->required();
    cl->add_option("--out", cl_out, "Output PGM/PPM")->required();
    cl->add_option("--tiles-x", cl_params.tiles_x, "Tile columns")->capture_default_str();
    cl->add_option("--tiles-y", cl_params.tiles_y, "Tile rows")->capture_default_str();
    cl->add_option("--clip", cl_params.clip_limit, "Clip limit (multiple of the mean bin height)")
        ->capture_default_str();
    cl->add_option("--bins", cl_params.bins, "Histogram bins")->capture_default_str();
    cl->callback([&] {
        action = [&] {
            const auto image = read_pnm(cl_in);
            std::optional<std::string> warning;
            AnyImage result;
            if (const auto* gray = std::get_if<Gray8Image>(&image)) {
                auto r = clahe(*gray, cl_params);
                result = std::move(r.image);
                warning = r.warning;
            } else {
                auto r = clahe(std::get<Rgb8Image>(image), cl_params);
                result = std::move(r.image);
                warning = r.warning;
            }
            if (warning) err << json{{"warning", *warning}}.dump() << "\n";
            write_pnm(output_path(g, cl_out), result);
            out << "wrote " << output_path(g, cl_out).string() << "\n";
        };
    });

    // mask2det
    auto* m2d = app.add_subcommand("mask2det", "Threshold and cluster a fuzzy mask into detections");
    std::string m2d_mask, m2d_out;
    double m2d_threshold = 0.5, m2d_t = 0;
    int m2d_min_area = kDefaultMinArea, m2d_conn = 8;
    long m2d_frame = 0;
    m2d->add_option("--mask", m2d_mask, "Mask PGM")->required();
    m2d->add_option("--threshold", m2d_threshold, "Confidence threshold")->capture_default_str();
    m2d->add_option("--min-area", m2d_min_area, "Minimum component area in pixels")->capture_default_str();
    m2d->add_option("--connectivity", m2d_conn, "4 or 8")->capture_default_str();
    m2d->add_option("--frame", m2d_frame, "Frame id for the detections");
    m2d->add_option("--t", m2d_t, "Timestamp in seconds");
    m2d->add_option("--out", m2d_out, "Detection log JSONL")->required();
    m2d->callback([&] {
        action = [&] {
            const auto mask = read_mask(m2d_mask);
            const auto dets =
                mask_to_detections(mask, m2d_frame, m2d_threshold, m2d_min_area, parse_connectivity(m2d_conn));
            std::vector<LoggedDetection> log;
            for (const auto& d : dets) log.push_back({d, m2d_t, std::nullopt});
            write_detection_log(output_path(g, m2d_out), log);
            out << dets.size() << " detections\n";
        };
    });

    // bboxexport
    auto* bx = app.add_subcommand("bboxexport", "Export bounding boxes from a fuzzy annotation");
    std::string bx_mask, bx_id, bx_out, bx_yolo, bx_annotator, bx_timestamp;
    double bx_threshold = 0.5;
    int bx_min_area = kDefaultMinArea, bx_class = 0;
    bx->add_option("--mask", bx_mask, "Mask PGM")->required();
    bx->add_option("--image-id", bx_id, "Image id recorded in the output");
    bx->add_option("--threshold", bx_threshold, "Confidence threshold")->capture_default_str();
    bx->add_option("--min-area", bx_min_area, "Minimum component area")->capture_default_str();
    bx->add_option("--annotator", bx_annotator, "Annotator name");
    bx->add_option("--timestamp", bx_timestamp, "Timestamp string");
    bx->add_option("--out", bx_out, "Annotation record JSON")->required();
    bx->add_option("--yolo", bx_yolo, "Also write YOLO txt lines");
    bx->add_option("--class-id", bx_class, "YOLO class id");
    bx->callback([&] {
        action = [&] {
            const auto mask = read_mask(bx_mask);
            const auto rec = export_bboxes(mask, bx_id, bx_threshold, bx_min_area, bx_annotator, bx_timestamp);
            write_json(g, bx_out, to_json(rec));
            if (!bx_yolo.empty()) {
                std::string text;
                for (const auto& line : to_yolo_lines(rec, mask.width(), mask.height(), bx_class)) text += line + "\n";
                write_file_atomic(output_path(g, bx_yolo), text);
            }
            out << rec.instances.size() << " boxes\n";
        };
    });

    // eval
    auto* ev = app.add_subcommand("eval", "ROC / AUROC / max-accuracy evaluation of a detection log");
    std::string ev_pred, ev_gt, ev_out, ev_svg;
    EvalOptions ev_opts;
    double ev_prior = -1;
    std::vector<double> ev_spec;
    ev->add_option("--pred", ev_pred, "Detection log JSONL")->required();
    ev->add_option("--gt", ev_gt, "Ground truth JSONL")->required();
    ev->add_option("--iou", ev_opts.iou_threshold, "IoU threshold for a match")->capture_default_str();
    ev->add_option("--prior", ev_prior, "Positive prior for max accuracy (default: positive-frame fraction)");
    ev->add_option("--specificity", ev_spec, "Target specificities for working points (default 0.95)");
    ev->add_flag("--fp-per-frame", ev_opts.include_fp_per_frame, "Also report the FP-per-frame curve");
    ev->add_option("--out", ev_out, "Report JSON (stdout when omitted)");
    ev->add_option("--svg", ev_svg, "ROC plot SVG");
    ev->callback([&] {
        action = [&] {
            if (ev_prior >= 0) ev_opts.positive_fraction = ev_prior;
            if (!ev_spec.empty()) ev_opts.target_specificities = ev_spec;
            const auto log = read_detection_log(ev_pred);
            const auto gt = read_ground_truth(ev_gt);
            const auto preds = detections_of(log);
            const auto report = evaluation_report(preds, gt, ev_opts);
            if (ev_out.empty()) {
                out << report.dump(2) << "\n";
            } else {
                write_json(g, ev_out, report);
                out << "auroc " << report["auroc"].get<double>() << ", max accuracy "
                    << report["max_accuracy"].get<double>() << "\n";
            }
            if (!ev_svg.empty()) {
                write_file_atomic(output_path(g, ev_svg), roc_svg(roc_curve(preds, gt, ev_opts.iou_threshold)));
            }
        };
    });

    // stabilize
    auto* st = app.add_subcommand("stabilize", "n-frame validation of a detection log");
    std::string st_log, st_odo, st_cam, st_out, st_review, st_position = "mean";
    StabilizerConfig st_cfg;
    st->add_option("--log", st_log, "Detection log JSONL")->required();
    st->add_option("--odometry", st_odo, "Odometry JSONL {t, x_m, v_mps}")->required();
    st->add_option("--camera", st_cam, "Camera model JSON")->required();
    st->add_option("--n", st_cfg.n, "Frames required to validate")->capture_default_str();
    st->add_option("--gate", st_cfg.gate_m, "Association gate in metres")->capture_default_str();
    st->add_option("--max-gap", st_cfg.max_gap_frames, "Missed frames before a track expires")->capture_default_str();
    st->add_option("--position", st_position, "mean or last")->check(CLI::IsMember({"mean", "last"}));
    st->add_option("--out", st_out, "Validated saplings JSON")->required();
    st->add_option("--review", st_review, "Review candidates JSON");
    st->callback([&] {
        action = [&] {
            st_cfg.position_update = *parse_position_update(st_position);
            const auto cam = camera_from_json(read_json(st_cam));
            const auto run = stabilize_log(read_detection_log(st_log), read_odometry(st_odo), cam, st_cfg);
            json validated = json::array(), review = json::array();
            for (const auto& v : run.validated) validated.push_back(to_json(v));
            for (const auto& c : run.review) review.push_back(to_json(c));
            write_json(g, st_out, {{"validated", validated}, {"review", review}});
            if (!st_review.empty()) write_json(g, st_review, review);
            out << run.validated.size() << " saplings validated, " << run.review.size() << " review candidates\n";
        };
    });

    // plan
    auto* pl = app.add_subcommand("plan", "Retract/extend schedule and safety report for validated saplings");
    std::string pl_saplings, pl_out, pl_report, pl_margin = "0,0";
    double pl_v = 0;
    ToolParams pl_params;
    pl->add_option("--saplings", pl_saplings, "Saplings JSON (numbers, validated records or stabilize output)")
        ->required();
    pl->add_option("--v", pl_v, "Speed in m/s")->required();
    pl->add_option("--tr", pl_params.t_r, "Retraction time in s")->required();
    pl->add_option("--te", pl_params.t_e, "Extension time in s")->required();
    pl->add_option("--margin", pl_margin, "Safety margin a,b: delta = a + b*v")->capture_default_str();
    pl->add_option("--out", pl_out, "Schedule JSON (stdout when omitted)");
    pl->add_option("--report", pl_report, "Safety report JSON");
    pl->callback([&] {
        action = [&] {
            std::tie(pl_params.margin_a, pl_params.margin_b) = parse_pair(pl_margin, "--margin");
            const auto saplings = read_saplings(pl_saplings);
            const auto schedule = plan_schedule(saplings, pl_v, pl_params);
            const auto report = verify_safety(schedule, saplings, pl_v, pl_params);
            if (pl_out.empty()) out << to_json(schedule).dump(2) << "\n";
            else write_json(g, pl_out, to_json(schedule));
            if (!pl_report.empty()) write_json(g, pl_report, to_json(report));
            if (!pl_out.empty()) {
                out << schedule.events.size() / 2 << " retraction intervals, " << report.violations.size()
                    << " violations\n";
            }
        };
    });

    // simulate
    auto* sim = app.add_subcommand("simulate", "Seeded end-to-end field simulation");
    std::string sim_scenario, sim_out, sim_trace;
    int sim_n = 0;
    bool sim_no_events = false;
    sim->add_option("--scenario", sim_scenario, "Scenario JSON (defaults when omitted)");
    sim->add_option("--n", sim_n, "Override the stabilizer's n");
    sim->add_option("--out", sim_out, "Report JSON (stdout when omitted)");
    sim->add_option("--trace-dir", sim_trace, "Directory for detection/odometry/schedule traces");
    sim->add_flag("--no-events", sim_no_events, "Omit the per-run event log from the report");
    sim->callback([&] {
        action = [&] {
            auto scenario = sim_scenario.empty() ? FieldScenario{} : read_scenario(sim_scenario);
            if (g.seed_given) scenario.seed = g.seed;
            if (sim_n > 0) scenario.stabilizer.n = sim_n;
            validate(scenario);
            const auto run = simulate_run(scenario);
            const auto report = to_json(run.report, !sim_no_events);
            if (sim_out.empty()) {
                out << report.dump(2) << "\n";
            } else {
                write_json(g, sim_out, report);
                const auto& r = run.report;
                out << r.saplings_protected << "/" << r.saplings_total << " saplings protected, "
                    << r.saplings_validated << " validated, weeds cleared " << r.weeds_cleared_fraction
                    << ", false retraction " << r.false_retraction_length_m << " m\n";
            }
            if (!sim_trace.empty()) write_traces(run, output_path(g, sim_trace));
        };
    });

    // ingest
    auto* in = app.add_subcommand("ingest", "Register images, detection logs and review candidates in a dataset");
    std::string in_root, in_log, in_review;
    std::vector<std::string> in_files;
    CaptureMetadata in_meta;
    in->add_option("--root", in_root, "Dataset root directory")->required();
    in->add_option("files", in_files, "PGM/PPM images");
    in->add_option("--species", in_meta.species, "Species tag");
    in->add_option("--season", in_meta.season, "Season tag");
    in->add_option("--weather", in_meta.weather, "Weather tag");
    in->add_option("--log", in_log, "Detection log JSONL to register");
    in->add_option("--review", in_review, "Review candidates JSON (from stabilize) to enqueue");
    in->callback([&] {
        action = [&] {
            Datastore store(in_root);
            std::vector<fs::path> files(in_files.begin(), in_files.end());
            auto result = to_json(store.ingest(files, in_meta));
            if (!in_log.empty()) {
                const auto log = read_detection_log(in_log);
                result["detections"] = store.ingest_detections(log).size();
            }
            if (!in_review.empty()) {
                std::vector<ReviewCandidate> candidates;
                for (const auto& c : read_json(in_review)) candidates.push_back(review_candidate_from_json(c));
                const auto requests = review_requests(candidates);
                json entries = json::array();
                for (const auto& e : store.enqueue_reviews(requests)) entries.push_back(e.id);
                result["review_entries"] = entries;
            }
            out << result.dump(2) << "\n";
            if (!result["errors"].empty()) err << json{{"warning", "some files were not ingested"}}.dump() << "\n";
        };
    });

    // serve
    auto* sv = app.add_subcommand("serve", "HTTP service for the annotation and review UI");
    std::string sv_root, sv_host = "127.0.0.1";
    int sv_port = 8080;
    sv->add_option("--root", sv_root, "Dataset root directory")->required();
    sv->add_option("--port", sv_port, "Port (0 = ephemeral)")->capture_default_str();
    sv->add_option("--host", sv_host, "Bind address")->capture_default_str();
    sv->callback([&] {
        action = [&] {
            Datastore store(sv_root);
            DatastoreService service(store);
            int port = sv_port;
            if (port == 0) {
                port = service.bind_any_port(sv_host);
                if (port < 0) throw std::runtime_error("could not bind " + sv_host);
            } else if (!service.bind(sv_host, port)) {
                throw std::runtime_error("could not bind " + sv_host + ":" + std::to_string(port));
            }
            out << json{{"listening", sv_host + ":" + std::to_string(port)}}.dump() << std::endl;
            g_serving = &service;
            std::signal(SIGINT, stop_serving);
            std::signal(SIGTERM, stop_serving);
            service.serve();
            g_serving = nullptr;
        };
    });

    std::vector<std::string> storage{"clearing"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : storage) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        g.seed_given = app.count("--seed") > 0;
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        // subcommand help requests surface as parse errors with exit code 0
        if (e.get_exit_code() == 0) {
            out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
            return 0;
        }
        err << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }

    try {
        if (g.verbosity > 0) err << "running " << app.get_subcommands().front()->get_name() << "\n";
        action();
        return 0;
    } catch (const UsageError& e) {
        err << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const NotFoundError& e) {
        err << json{{"error", "not-found"}, {"message", e.what()}}.dump() << "\n";
    } catch (const FormatError& e) {
        err << json{{"error", "format"}, {"message", e.what()}}.dump() << "\n";
    } catch (const std::invalid_argument& e) {
        err << json{{"error", "invalid-argument"}, {"message", e.what()}}.dump() << "\n";
    } catch (const std::exception& e) {
        err << json{{"error", "runtime"}, {"message", e.what()}}.dump() << "\n";
    }
    return 1;
}

}  // namespace clearing
