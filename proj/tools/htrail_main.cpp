#include <omp.h>

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "htrail/dataset.hpp"
#include "htrail/eval.hpp"
#include "htrail/model_io.hpp"
#include "htrail/sim.hpp"
#include "htrail/train.hpp"

namespace fs = std::filesystem;
using htrail::data::AblationMode;
using htrail::data::Session;
using htrail::data::Window;

namespace {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        throw std::invalid_argument("bad numeric value '" + s + "'");
    }
    return v;
}

long long parse_int(const std::string& s) {
    const double v = parse_double(s);
    const long long n = static_cast<long long>(v);
    if (static_cast<double>(n) != v) throw std::invalid_argument("bad integer value '" + s + "'");
    return n;
}

// --- config file plumbing -------------------------------------------------
//
// Flat key=value lines; '#' comments. Flags beat file values, file values
// beat defaults. Keys any command understands are accepted everywhere so one
// file can drive a whole gen/train/eval pipeline; unknown keys are errors.

struct Binding {
    CLI::Option* opt;
    std::function<void(const std::string&)> apply;
};
using Bindings = std::map<std::string, Binding>;

std::set<std::string>& vocabulary() {
    static std::set<std::string> v;
    return v;
}

template <typename T>
void bind_key(CLI::App& cmd, Bindings& b, const std::string& key, T& var,
              const std::string& desc) {
    CLI::Option* opt = cmd.add_option("--" + key, var, desc);
    vocabulary().insert(key);
    b[key] = Binding{opt, [&var](const std::string& s) {
                         if constexpr (std::is_floating_point_v<T>) {
                             var = parse_double(s);
                         } else {
                             var = static_cast<T>(parse_int(s));
                         }
                     }};
}

std::uint64_t parse_u64_value(const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        throw std::invalid_argument("bad seed value '" + s + "'");
    }
    return v;
}

void bind_seed(CLI::App& cmd, Bindings& b, std::uint64_t& var, const std::string& desc) {
    CLI::Option* opt = cmd.add_option("--seed", var, desc);
    vocabulary().insert("seed");
    b["seed"] = Binding{opt, [&var](const std::string& s) { var = parse_u64_value(s); }};
}

void apply_config_file(const std::string& path, const Bindings& b) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto z = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, z - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!vocabulary().count(key)) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown key '" + key + "'");
        }
        const auto it = b.find(key);
        if (it == b.end()) continue;             // known key, other command
        if (it->second.opt->count() > 0) continue;  // flag wins
        it->second.apply(value);
    }
}

std::uint64_t default_seed_from_env() {
    const char* env = std::getenv("HTRAIL_SEED");
    if (!env || !*env) return 1;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0' || errno == ERANGE) {
        throw std::invalid_argument(std::string("HTRAIL_SEED is not an integer: '") + env + "'");
    }
    return v;
}

// --- shared option groups ---------------------------------------------------

struct SimOptions {
    htrail::sim::SimConfig cfg;

    void bind(CLI::App& cmd, Bindings& b) {
        bind_key(cmd, b, "dt", cfg.dt, "frame period [s]");
        bind_key(cmd, b, "session_min_s", cfg.session_min_s, "shortest session [s]");
        bind_key(cmd, b, "session_max_s", cfg.session_max_s, "longest session [s]");
        bind_key(cmd, b, "wheelbase", cfg.wheelbase, "wheel separation [m]");
        bind_key(cmd, b, "spring_k", cfg.spring_k, "device spring constant [N/m]");
        bind_key(cmd, b, "damping_b", cfg.damping_b, "device damping [N s/m]");
        bind_key(cmd, b, "human_mass", cfg.human_mass, "follower mass [kg]");
        bind_key(cmd, b, "grip_damping", cfg.grip_damping, "arm damping on the grip [N s/m]");
        bind_key(cmd, b, "gait_amplitude", cfg.gait_amplitude, "lateral sway amplitude [m]");
        bind_key(cmd, b, "gait_frequency", cfg.gait_frequency, "sway frequency [Hz]");
        bind_key(cmd, b, "hand_offset", cfg.hand_offset, "grip anchor ahead of torso [m]");
        bind_key(cmd, b, "workspace_radius", cfg.workspace_radius, "device workspace radius [m]");
        bind_key(cmd, b, "heading_tau", cfg.heading_tau, "heading low-pass constant [s]");
        bind_key(cmd, b, "heading_min_speed", cfg.heading_min_speed,
                 "torso reorients only above this speed [m/s]");
        bind_key(cmd, b, "max_wheel_speed", cfg.max_wheel_speed, "wheel speed bound [m/s]");
        bind_key(cmd, b, "cruise_speed", cfg.cruise_speed, "wander speed set point [m/s]");
        bind_key(cmd, b, "max_wheel_step", cfg.max_wheel_step, "wheel speed slew per step [m/s]");
        bind_key(cmd, b, "arena_half", cfg.arena_half, "half side of the square arena [m]");
        bind_key(cmd, b, "substeps", cfg.substeps, "integrator substeps per frame");
        bind_key(cmd, b, "latent_noise_std", cfg.latent_noise_std, "depth latent noise std");
    }
    void provenance(std::vector<std::string>& out) const {
        out.push_back("dt=" + fmt_real(cfg.dt));
        out.push_back("session_min_s=" + fmt_real(cfg.session_min_s));
        out.push_back("session_max_s=" + fmt_real(cfg.session_max_s));
        out.push_back("wheelbase=" + fmt_real(cfg.wheelbase));
        out.push_back("spring_k=" + fmt_real(cfg.spring_k));
        out.push_back("damping_b=" + fmt_real(cfg.damping_b));
        out.push_back("human_mass=" + fmt_real(cfg.human_mass));
        out.push_back("grip_damping=" + fmt_real(cfg.grip_damping));
        out.push_back("gait_amplitude=" + fmt_real(cfg.gait_amplitude));
        out.push_back("gait_frequency=" + fmt_real(cfg.gait_frequency));
        out.push_back("hand_offset=" + fmt_real(cfg.hand_offset));
        out.push_back("workspace_radius=" + fmt_real(cfg.workspace_radius));
        out.push_back("heading_tau=" + fmt_real(cfg.heading_tau));
        out.push_back("heading_min_speed=" + fmt_real(cfg.heading_min_speed));
        out.push_back("max_wheel_speed=" + fmt_real(cfg.max_wheel_speed));
        out.push_back("cruise_speed=" + fmt_real(cfg.cruise_speed));
        out.push_back("max_wheel_step=" + fmt_real(cfg.max_wheel_step));
        out.push_back("arena_half=" + fmt_real(cfg.arena_half));
        out.push_back("substeps=" + std::to_string(cfg.substeps));
        out.push_back("latent_noise_std=" + fmt_real(cfg.latent_noise_std));
    }
};

struct TrainOptions {
    htrail::model::TrainConfig cfg;

    void bind(CLI::App& cmd, Bindings& b) {
        bind_key(cmd, b, "epochs", cfg.epochs, "training epochs");
        bind_key(cmd, b, "batch", cfg.batch_size, "minibatch size");
        bind_key(cmd, b, "lr", cfg.lr, "Adam learning rate");
        bind_key(cmd, b, "clip", cfg.clip_norm, "gradient clipping norm");
        bind_key(cmd, b, "hidden", cfg.hidden, "GRU hidden size");
    }
    void provenance(std::vector<std::string>& out) const {
        out.push_back("epochs=" + std::to_string(cfg.epochs));
        out.push_back("batch=" + std::to_string(cfg.batch_size));
        out.push_back("lr=" + fmt_real(cfg.lr));
        out.push_back("clip=" + fmt_real(cfg.clip_norm));
        out.push_back("hidden=" + std::to_string(cfg.hidden));
    }
};

std::vector<AblationMode> resolve_modes(const std::vector<std::string>& names) {
    std::vector<AblationMode> modes;
    if (names.empty()) {
        modes.assign(htrail::data::kAllModes.begin(), htrail::data::kAllModes.end());
        return modes;
    }
    for (const std::string& n : names) {
        if (n == "all") {
            modes.assign(htrail::data::kAllModes.begin(), htrail::data::kAllModes.end());
            return modes;
        }
        modes.push_back(htrail::data::parse_mode(n));
    }
    return modes;
}

std::string mode_file_tag(AblationMode m) {
    std::string tag;
    for (char c : htrail::data::mode_name(m)) {
        if (c != '+') tag += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return tag;
}

std::vector<Session> load_data_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("data directory '" + dir + "' not found");
    auto sessions = htrail::data::load_sessions(dir);
    if (sessions.empty()) throw std::runtime_error("no .htrail sessions in '" + dir + "'");
    return sessions;
}

// --- gen --------------------------------------------------------------------

struct GenArgs {
    SimOptions sim;
    int participants = 4;
    int sessions = 20;
    std::uint64_t seed = 1;
    std::string out;
    std::string config;
    Bindings bindings;
};

int cmd_gen(GenArgs& a) {
    if (!a.config.empty()) apply_config_file(a.config, a.bindings);
    if (a.participants < 1 || a.sessions < 1) {
        throw std::invalid_argument("--participants and --sessions must be at least 1");
    }
    a.sim.cfg.seed = a.seed;
    a.sim.cfg.validate();

    std::vector<std::string> prov;
    prov.push_back("seed=" + std::to_string(a.seed));
    prov.push_back("participants=" + std::to_string(a.participants));
    prov.push_back("sessions=" + std::to_string(a.sessions));
    a.sim.provenance(prov);

    struct Item {
        std::string pid, sid;
    };
    std::vector<Item> items;
    for (int p = 0; p < a.participants; ++p) {
        char pid[16];
        std::snprintf(pid, sizeof(pid), "p%02d", p + 1);
        for (int s = 0; s < a.sessions; ++s) {
            char sid[16];
            std::snprintf(sid, sizeof(sid), "s%03d", s + 1);
            items.push_back(Item{pid, sid});
        }
    }

    std::vector<Session> generated(items.size());
    // sessions draw from independent streams, so order does not matter
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(items.size()); ++i) {
        generated[static_cast<std::size_t>(i)] = htrail::sim::gen_session(
            a.sim.cfg, items[static_cast<std::size_t>(i)].pid, items[static_cast<std::size_t>(i)].sid);
    }

    fs::create_directories(a.out);
    for (const Session& s : generated) {
        const auto path = fs::path(a.out) / (s.participant_id + "_" + s.session_id + ".htrail");
        htrail::data::save_session(s, path.string(), prov);
    }

    std::ofstream manifest(fs::path(a.out) / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot write manifest in '" + a.out + "'");
    manifest << "htrail.manifest.v1 participants=" << a.participants
             << " sessions=" << a.sessions << " seed=" << a.seed << "\n";
    for (const std::string& p : prov) manifest << "# " << p << "\n";
    for (const Session& s : generated) {
        manifest << s.participant_id << "_" << s.session_id << ".htrail " << s.participant_id
                 << ' ' << s.session_id << ' ' << s.frames.size() << "\n";
    }

    std::cout << "wrote " << generated.size() << " sessions to " << a.out << "\n";
    return 0;
}

// --- train --------------------------------------------------------------------

struct TrainArgs {
    TrainOptions train;
    std::uint64_t seed = 1;
    std::string data;
    std::string out;
    std::string holdout;
    std::vector<std::string> mode_names;
    std::string config;
    Bindings bindings;
};

int cmd_train(TrainArgs& a) {
    if (!a.config.empty()) apply_config_file(a.config, a.bindings);
    a.train.cfg.seed = a.seed;
    if (a.train.cfg.epochs < 1 || a.train.cfg.batch_size < 1 || a.train.cfg.hidden < 1 ||
        a.train.cfg.lr <= 0.0 || a.train.cfg.clip_norm <= 0.0) {
        throw std::invalid_argument("training configuration values must be positive");
    }
    const auto modes = resolve_modes(a.mode_names);

    auto sessions = load_data_dir(a.data);
    std::vector<Session> train_sessions;
    for (Session& s : sessions) {
        if (s.participant_id != a.holdout) train_sessions.push_back(std::move(s));
    }
    if (train_sessions.empty()) {
        throw std::runtime_error("holdout '" + a.holdout + "' leaves no training sessions");
    }
    const auto windows = htrail::data::window_sessions(train_sessions);
    if (windows.empty()) throw std::runtime_error("sessions are shorter than one 20-step window");
    const auto norm = htrail::data::fit_normalizer(windows);

    std::vector<std::string> prov;
    prov.push_back("seed=" + std::to_string(a.seed));
    prov.push_back("data=" + a.data);
    prov.push_back("holdout=" + (a.holdout.empty() ? std::string("<none>") : a.holdout));
    a.train.provenance(prov);

    fs::create_directories(a.out);
    for (AblationMode mode : modes) {
        const auto res = htrail::model::train(windows, mode, norm, a.train.cfg);
        const std::string tag = mode_file_tag(mode);

        std::vector<std::string> mprov = prov;
        mprov.insert(mprov.begin(), "mode=" + htrail::data::mode_name(mode));
        htrail::model::save_model((fs::path(a.out) / ("model_" + tag + ".model")).string(),
                                  res.params, norm, a.train.cfg, mprov);

        std::ofstream hist(fs::path(a.out) / ("loss_" + tag + ".txt"));
        if (!hist) throw std::runtime_error("cannot write loss history in '" + a.out + "'");
        for (const std::string& p : mprov) hist << "# " << p << "\n";
        for (double l : res.loss_history) hist << fmt_real(l) << "\n";

        std::cout << "mode " << htrail::data::mode_name(mode) << ": trained " << windows.size()
                  << " windows, final loss " << fmt_real(res.loss_history.back()) << "\n";
    }
    return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
    TrainOptions train;
    std::uint64_t seed = 1;
    std::string data;
    std::string out;
    std::string model_path;
    std::vector<std::string> mode_names;
    bool baseline_zero_offset = false;
    int export_count = 0;
    std::string config;
    Bindings bindings;
};

void export_window(const fs::path& path, const Window& w, int fold_n,
                   std::span<const std::string> methods,
                   std::span<const std::vector<htrail::geom::Pose2D>> preds,
                   std::span<const std::string> prov) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    for (const std::string& p : prov) os << "# " << p << "\n";
    os << "# session=" << w.session->participant_id << "_" << w.session->session_id
       << " start=" << w.start << " baseline_n=" << fold_n << "\n";
    htrail::eval::export_trajectories(os, w, methods, preds);
}

// model P-triple predictions mapped onto the known robot path
std::vector<htrail::geom::Pose2D> model_world_pred(const htrail::model::ModelParams& params,
                                                   const Window& w,
                                                   const htrail::data::Normalizer& norm) {
    const auto pred = htrail::model::predict(params, w, norm);
    std::vector<htrail::geom::Pose2D> out;
    out.reserve(pred.p.size());
    for (std::size_t i = 0; i < pred.p.size(); ++i) {
        out.push_back(htrail::geom::compose(
            w.frame(htrail::data::kObsLen + static_cast<int>(i)).robot_world, pred.p[i]));
    }
    return out;
}

int cmd_eval(EvalArgs& a) {
    if (!a.config.empty()) apply_config_file(a.config, a.bindings);
    a.train.cfg.seed = a.seed;
    if (a.export_count < 0) throw std::invalid_argument("--export-trajectories must be >= 0");

    auto sessions = load_data_dir(a.data);
    fs::create_directories(a.out);

    std::vector<std::string> prov;
    prov.push_back("seed=" + std::to_string(a.seed));
    prov.push_back("data=" + a.data);
    prov.push_back("baseline_zero_offset=" + std::to_string(a.baseline_zero_offset ? 1 : 0));

    std::vector<htrail::eval::MetricsReport> table;
    std::vector<std::string> methods{"Baseline"};
    // per exported window: fold lag + per-method world predictions
    struct Chosen {
        Window w;
        int n = 0;
        std::vector<std::vector<htrail::geom::Pose2D>> preds;
    };
    std::vector<Chosen> chosen;

    if (!a.model_path.empty()) {
        // one pre-trained model against the baseline, the whole dir as test set
        htrail::model::LoadedModel lm =
            a.mode_names.empty()
                ? htrail::model::load_model(a.model_path)
                : htrail::model::load_model(a.model_path,
                                            htrail::data::parse_mode(a.mode_names.front()));
        if (a.mode_names.size() > 1) {
            throw std::invalid_argument("single-model evaluation takes at most one --mode");
        }
        prov.push_back("model=" + a.model_path);
        prov.push_back("mode=" + htrail::data::mode_name(lm.params.mode));
        prov.push_back("baseline_n_fit=eval-data");

        const int n = htrail::eval::baseline_fit_n(sessions);
        const htrail::eval::BaselineConfig bl{n, a.baseline_zero_offset};
        std::vector<Window> eval_windows;
        for (const Window& w : htrail::data::window_sessions(sessions)) {
            if (htrail::eval::baseline_applicable(w, n)) eval_windows.push_back(w);
        }
        if (eval_windows.empty()) throw std::runtime_error("no evaluable windows in '" + a.data + "'");

        std::vector<htrail::eval::MetricsReport> bl_rows, model_rows;
        for (const Window& w : eval_windows) {
            std::vector<htrail::geom::Pose2D> truth;
            for (int i = htrail::data::kObsLen; i < htrail::data::kWindowLen; ++i) {
                truth.push_back(w.frame(i).human_world);
            }
            bl_rows.push_back(
                htrail::eval::compute_metrics(htrail::eval::baseline_predict(w, bl), truth));
            model_rows.push_back(htrail::eval::compute_metrics(
                model_world_pred(lm.params, w, lm.normalizer), truth));
        }
        auto b = htrail::eval::aggregate(bl_rows);
        b.method = "Baseline";
        auto m = htrail::eval::aggregate(model_rows);
        m.method = htrail::data::mode_name(lm.params.mode);
        table = {b, m};
        methods.push_back(m.method);

        const int count =
            static_cast<int>(std::min<long>(a.export_count, static_cast<long>(eval_windows.size())));
        for (int k = 0; k < count; ++k) {
            const Window& w = eval_windows[static_cast<std::size_t>(
                k * eval_windows.size() / static_cast<std::size_t>(count))];
            Chosen c;
            c.w = w;
            c.n = n;
            c.preds.push_back(htrail::eval::baseline_predict(w, bl));
            c.preds.push_back(model_world_pred(lm.params, w, lm.normalizer));
            chosen.push_back(std::move(c));
        }
    } else {
        const auto modes = resolve_modes(a.mode_names);
        htrail::eval::AblationConfig acfg;
        acfg.modes = modes;
        acfg.train = a.train.cfg;
        acfg.baseline_zero_offset = a.baseline_zero_offset;

        std::string mode_list;
        for (AblationMode m : modes) {
            if (!mode_list.empty()) mode_list += ",";
            mode_list += htrail::data::mode_name(m);
        }
        prov.push_back("modes=" + mode_list);
        a.train.provenance(prov);

        const auto res = htrail::eval::run_ablation(sessions, acfg);
        table = res.table;
        for (AblationMode m : modes) methods.push_back(htrail::data::mode_name(m));
        for (const auto& art : res.folds) {
            prov.push_back("fold_" + art.fold.test_participant +
                           "_baseline_n=" + std::to_string(art.baseline_n));
        }

        if (a.export_count > 0) {
            // all evaluable held-out windows, tagged with their fold
            struct Cand {
                Window w;
                std::size_t fold;
            };
            std::vector<Cand> cands;
            for (std::size_t fi = 0; fi < res.folds.size(); ++fi) {
                const auto& art = res.folds[fi];
                for (const Session& s : sessions) {
                    if (s.participant_id != art.fold.test_participant) continue;
                    for (const Window& w : htrail::data::window_session(s)) {
                        if (htrail::eval::baseline_applicable(w, art.baseline_n)) {
                            cands.push_back(Cand{w, fi});
                        }
                    }
                }
            }
            const int count =
                static_cast<int>(std::min<long>(a.export_count, static_cast<long>(cands.size())));
            for (int k = 0; k < count; ++k) {
                const Cand& cand = cands[static_cast<std::size_t>(k) * cands.size() /
                                         static_cast<std::size_t>(count)];
                const auto& art = res.folds[cand.fold];
                Chosen c;
                c.w = cand.w;
                c.n = art.baseline_n;
                c.preds.push_back(htrail::eval::baseline_predict(
                    cand.w, htrail::eval::BaselineConfig{art.baseline_n,
                                                         a.baseline_zero_offset}));
                for (std::size_t mi = 0; mi < modes.size(); ++mi) {
                    c.preds.push_back(model_world_pred(art.models[mi], cand.w, art.normalizer));
                }
                chosen.push_back(std::move(c));
            }
        }
    }

    {
        std::ofstream os(fs::path(a.out) / "metrics.tsv");
        if (!os) throw std::runtime_error("cannot write metrics in '" + a.out + "'");
        htrail::eval::write_metrics(os, table, prov);
    }
    for (std::size_t k = 0; k < chosen.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "traj_%03zu.csv", k + 1);
        export_window(fs::path(a.out) / name, chosen[k].w, chosen[k].n, methods, chosen[k].preds,
                      prov);
    }

    std::cout << htrail::eval::format_metrics_table(table);
    return 0;
}

// --- report --------------------------------------------------------------------

int cmd_report(const std::string& metrics_path) {
    std::ifstream is(metrics_path);
    if (!is) throw std::runtime_error("cannot open metrics file '" + metrics_path + "'");
    const auto table = htrail::eval::read_metrics(is);
    std::cout << htrail::eval::format_metrics_table(table);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic haptic-guidance trajectory prediction toolkit"};
    app.require_subcommand(1);

    std::uint64_t env_seed = 1;
    try {
        env_seed = default_seed_from_env();
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    GenArgs gen;
    gen.seed = env_seed;
    CLI::App* cgen = app.add_subcommand("gen", "generate synthetic guidance sessions");
    cgen->add_option("--out", gen.out, "output directory")->required();
    cgen->add_option("--participants", gen.participants, "number of participants");
    cgen->add_option("--sessions", gen.sessions, "sessions per participant");
    bind_seed(*cgen, gen.bindings, gen.seed, "master seed");
    cgen->add_option("--config", gen.config, "key=value config file");
    gen.sim.bind(*cgen, gen.bindings);

    TrainArgs tr;
    tr.seed = env_seed;
    CLI::App* ctrain = app.add_subcommand("train", "train predictors on session data");
    ctrain->add_option("--data", tr.data, "session directory")->required();
    ctrain->add_option("--out", tr.out, "output directory")->required();
    ctrain->add_option("--mode", tr.mode_names,
                       "ablation mode(s): r, r+h, r+d, r+h+d, all (default all)");
    ctrain->add_option("--holdout", tr.holdout, "participant to exclude from training");
    bind_seed(*ctrain, tr.bindings, tr.seed, "training seed");
    ctrain->add_option("--config", tr.config, "key=value config file");
    tr.train.bind(*ctrain, tr.bindings);

    EvalArgs ev;
    ev.seed = env_seed;
    CLI::App* ceval = app.add_subcommand("eval", "cross-validated ablation or single-model eval");
    ceval->add_option("--data", ev.data, "session directory")->required();
    ceval->add_option("--out", ev.out, "output directory")->required();
    ceval->add_option("--mode", ev.mode_names, "ablation mode(s), or the expected mode of --model");
    ceval->add_option("--model", ev.model_path, "evaluate one saved model instead of training");
    ceval->add_flag("--baseline-zero-offset", ev.baseline_zero_offset,
                    "baseline predicts the delayed robot pose itself");
    ceval->add_option("--export-trajectories", ev.export_count,
                      "number of held-out windows to export as CSV");
    bind_seed(*ceval, ev.bindings, ev.seed, "training seed");
    ceval->add_option("--config", ev.config, "key=value config file");
    ev.train.bind(*ceval, ev.bindings);

    std::string metrics_path;
    CLI::App* creport = app.add_subcommand("report", "re-render a metrics table");
    creport->add_option("--metrics", metrics_path, "metrics.tsv written by eval")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (cgen->parsed()) return cmd_gen(gen);
        if (ctrain->parsed()) return cmd_train(tr);
        if (ceval->parsed()) return cmd_eval(ev);
        if (creport->parsed()) return cmd_report(metrics_path);
        return 2;
    } catch (const htrail::model::numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
