// rfpose: file-staged command line front end.
//
//   rfpose simulate --scene s.json --config radar.cfg --output h.bin [--radar vertical] [--frames 8] [--seed 1]
//   rfpose heatmap  adc.bin --config radar.cfg --output out.tensor [--branch fft|rd]
//   rfpose probmap  h.bin v.bin --config radar.cfg [--cfar-config pipeline.cfg] --output p.tensor
//   rfpose eval     pred.json gt.json [--oks-config oks.cfg] --output metrics.json
//   rfpose fuse     a.tensor b.tensor --output f.tensor
//
// Every run writes <output>.manifest.json next to its main output.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rfpose/adc.hpp"
#include "rfpose/config.hpp"
#include "rfpose/error.hpp"
#include "rfpose/fusion.hpp"
#include "rfpose/pipeline.hpp"
#include "rfpose/pose_eval.hpp"
#include "rfpose/radar_sim.hpp"
#include "rfpose/tensor_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rfpose;

namespace {

constexpr const char* kVersion = "0.3.0";

enum class LogLevel { quiet, info, debug };

LogLevel log_level() {
    const char* v = std::getenv("RFPOSE_LOG");
    if (!v) return LogLevel::info;
    const std::string s(v);
    if (s == "quiet" || s == "0") return LogLevel::quiet;
    if (s == "debug" || s == "2") return LogLevel::debug;
    return LogLevel::info;
}

void note(LogLevel at, const std::string& msg) {
    if (log_level() >= at) std::cerr << "rfpose: " << msg << '\n';
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return out.str();
}

std::string sha256_hex(const std::string& s) {
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

/// Run record written beside the primary output.
class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)), started_(utc_now()) {}

    void config(const std::string& name, const std::string& canonical) { configs_[name] = canonical; }
    void input(const fs::path& p) { inputs_.emplace_back(p.filename().string(), sha256_hex(read_file_bytes(p))); }
    void output(const fs::path& p) { outputs_.emplace_back(p.filename().string(), sha256_hex(read_file_bytes(p))); }
    void seed(std::uint64_t s) { seed_ = s; }
    void param(const std::string& k, json v) { params_[k] = std::move(v); }

    void write(const fs::path& primary) const {
        json j;
        j["command"] = command_;
        j["tool_version"] = kVersion;
        std::string all;
        for (const auto& [name, text] : configs_) all += "[" + name + "]\n" + text;
        j["config_hash"] = sha256_hex(all);
        j["parameters"] = params_.empty() ? json::object() : params_;
        j["seed"] = seed_ ? json(*seed_) : json(nullptr);
        j["inputs"] = json::array();
        for (const auto& [n, d] : inputs_) j["inputs"].push_back({{"file", n}, {"sha256", d}});
        j["outputs"] = json::array();
        for (const auto& [n, d] : outputs_) j["outputs"].push_back({{"file", n}, {"sha256", d}});
        j["timestamps"] = {{"started", started_}, {"finished", utc_now()}};
        const auto path = fs::path(primary.string() + ".manifest.json");
        const std::string text = j.dump(2) + "\n";
        write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    }

private:
    std::string command_;
    std::string started_;
    std::map<std::string, std::string> configs_;
    std::vector<std::pair<std::string, std::string>> inputs_, outputs_;
    std::optional<std::uint64_t> seed_;
    json params_ = json::object();
};

void write_text(const fs::path& p, const std::string& text) {
    write_file_bytes(p, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

json read_json(const fs::path& p, ErrorKind kind) {
    const auto bytes = read_file_bytes(p);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        const std::string msg = p.string() + ": " + e.what();
        if (kind == ErrorKind::config) throw ConfigError(msg);
        throw FormatError(msg);
    }
}

RadarId parse_radar(const std::string& s) {
    try {
        return radar_id_from_string(s);
    } catch (const Error&) {
        throw ConfigError("--radar must be horizontal or vertical, got `" + s + "`");
    }
}

// ---------------------------------------------------------------- simulate

SceneSpec scene_from_json(const json& j, const std::string& origin) {
    try {
        SceneSpec s;
        for (const auto& t : j.value("targets", json::array())) {
            Target tg;
            tg.range = t.at("range").get<double>();
            tg.radial_velocity = t.value("radial_velocity", 0.0);
            tg.azimuth = t.value("azimuth", 0.0);
            tg.elevation = t.value("elevation", 0.0);
            tg.rcs_amplitude = t.value("rcs_amplitude", 1.0);
            s.targets.push_back(tg);
        }
        if (j.contains("snr_db") && !j["snr_db"].is_null()) s.snr_db = j["snr_db"].get<double>();
        if (j.contains("noise_reference")) s.noise_reference = j["noise_reference"].get<double>();
        s.noise_seed = j.value("seed", std::uint64_t{0});
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(origin + ": " + e.what());
    }
}

struct SimulateArgs {
    std::string scene, config, output, radar = "horizontal";
    std::optional<std::uint64_t> seed;
    std::size_t frames = kDefaultInputFrames;
    std::size_t lanes = 4;
};

int run_simulate(const SimulateArgs& a) {
    Manifest m("simulate");
    const auto kv = KeyValueConfig::load(a.config);
    const auto cfg = RadarConfig::from(kv);
    SceneSpec scene = scene_from_json(read_json(a.scene, ErrorKind::config), a.scene);
    if (a.seed) scene.noise_seed = *a.seed;
    if (a.frames < 1) throw ConfigError("--frames must be >= 1");
    const RadarId id = parse_radar(a.radar);
    const AdcLayout layout{a.lanes};

    std::vector<ChannelSamples> frames;
    for (std::size_t f = 0; f < a.frames; ++f) {
        auto sim = synth_frame(scene, cfg, id, static_cast<std::int64_t>(f));
        for (const auto& w : sim.warnings) note(LogLevel::info, "frame " + std::to_string(f) + ": " + w);
        frames.push_back(cube_to_channels(sim.cube));
    }
    write_file_bytes(a.output, serialize_raw_adc(frames, layout, cfg));
    note(LogLevel::debug, "wrote " + std::to_string(a.frames) + " frames to " + a.output);

    m.config("radar", kv.canonical());
    m.input(a.scene);
    m.output(a.output);
    m.seed(scene.noise_seed);
    m.param("radar", a.radar);
    m.param("frames", a.frames);
    m.param("lanes", a.lanes);
    m.write(a.output);
    return 0;
}

// ---------------------------------------------------------------- heatmap

struct HeatmapArgs {
    std::string input, config, output, branch = "fft", radar = "horizontal";
    std::optional<std::size_t> doppler_keep;
    std::optional<double> doppler_window;
    std::size_t lanes = 4;
};

int run_heatmap(const HeatmapArgs& a) {
    Manifest m("heatmap");
    const auto kv = KeyValueConfig::load(a.config);
    const auto cfg = RadarConfig::from(kv);
    if (a.branch != "fft" && a.branch != "rd") throw ConfigError("--branch must be fft or rd");
    const auto cubes = load_cubes(read_file_bytes(a.input), AdcLayout{a.lanes}, cfg, parse_radar(a.radar));

    std::optional<DopplerSampling> sampling;
    if (a.doppler_keep || a.doppler_window) {
        DopplerSampling s;
        if (a.doppler_keep) s.keep = *a.doppler_keep;
        if (a.doppler_window) s.window = *a.doppler_window;
        sampling = s;
    }
    if (sampling && a.branch != "fft") throw ConfigError("Doppler sampling applies to the fft branch only");

    std::vector<ComplexTensor> maps;
    for (const auto& cube : cubes) {
        maps.push_back(a.branch == "fft" ? fft_branch_map(cube, cfg, sampling).data : range_doppler_map(cube).data);
    }
    Shape shape{maps.size()};
    shape.insert(shape.end(), maps[0].shape().begin(), maps[0].shape().end());
    ComplexTensor out(shape);
    std::size_t pos = 0;
    for (const auto& t : maps)
        for (const auto& z : t.data()) out[pos++] = z;
    write_tensor(a.output, out);

    m.config("radar", kv.canonical());
    m.input(a.input);
    m.output(a.output);
    m.param("branch", a.branch);
    m.param("radar", a.radar);
    if (sampling) m.param("doppler_sampling", {{"keep", sampling->keep}, {"window", sampling->window}});
    m.write(a.output);
    return 0;
}

// ---------------------------------------------------------------- probmap

struct ProbmapArgs {
    std::string input_h, input_v, config, cfar_config, output;
    std::optional<std::size_t> guard, reference, pe_depth;
    std::optional<double> pfa;
    bool emit_cfar = false;
    std::size_t lanes = 4;
};

int run_probmap(const ProbmapArgs& a) {
    Manifest m("probmap");
    const auto kv = KeyValueConfig::load(a.config);
    const auto cfg = RadarConfig::from(kv);
    std::optional<KeyValueConfig> pkv;
    PipelineOptions opt;
    if (!a.cfar_config.empty()) {
        pkv = KeyValueConfig::load(a.cfar_config);
        opt = PipelineOptions::from(*pkv);
    }
    if (a.guard) opt.cfar.guard = *a.guard;
    if (a.reference) opt.cfar.reference = *a.reference;
    if (a.pfa) opt.cfar.pfa = *a.pfa;
    if (a.pe_depth) opt.pe_depth = *a.pe_depth;
    opt.validate();

    const AdcLayout layout{a.lanes};
    const auto h = load_cubes(read_file_bytes(a.input_h), layout, cfg, RadarId::horizontal);
    const auto v = load_cubes(read_file_bytes(a.input_v), layout, cfg, RadarId::vertical);
    if (h.size() != v.size()) {
        throw FormatError("frame count mismatch: horizontal has " + std::to_string(h.size()) + ", vertical has " +
                          std::to_string(v.size()));
    }

    const std::size_t A = FftLengths::defaults_for(cfg).primary, E = A;
    std::vector<double> maps, encoded;
    std::vector<double> mask_h, mask_v;
    json bins = json::array();
    std::size_t K = 0;
    for (std::size_t f = 0; f < h.size(); ++f) {
        const auto frame = probpe_frame(h[f], v[f], cfg, opt);
        const auto& P = frame.map;
        if (P.azimuth_bins() != A || P.elevation_bins() != E) throw ContractError("probmap: unexpected angle grid");
        for (std::size_t k = 0; k < P.range_bins.size(); ++k) {
            double sum = 0;
            for (std::size_t a2 = 0; a2 < A; ++a2)
                for (std::size_t e = 0; e < E; ++e) sum += P.values(k, a2, e);
            if (!P.empty_rows[k] && std::abs(sum - 1.0) > 1e-8) {
                throw ContractError("probmap: frame " + std::to_string(f) + " range bin " +
                                    std::to_string(P.range_bins.bins[k]) + " sums to " + std::to_string(sum));
            }
            bins.push_back({{"frame", f}, {"range_bin", P.range_bins.bins[k]}, {"empty", bool(P.empty_rows[k])}});
        }
        maps.insert(maps.end(), P.values.data().begin(), P.values.data().end());
        encoded.insert(encoded.end(), frame.encoded.values.data().begin(), frame.encoded.values.data().end());
        K += P.range_bins.size();
        if (a.emit_cfar) {
            const auto rh = frame.mask_h.as_real(), rv = frame.mask_v.as_real();
            mask_h.insert(mask_h.end(), rh.data().begin(), rh.data().end());
            mask_v.insert(mask_v.end(), rv.data().begin(), rv.data().end());
        }
        note(LogLevel::debug, "frame " + std::to_string(f) + ": " + std::to_string(P.range_bins.size()) + " range bins");
    }

    const fs::path out(a.output);
    const fs::path enc_path(a.output + ".encoded.tensor"), bins_path(a.output + ".bins.json");
    write_tensor(out, RealTensor({K, A, E}, std::move(maps)));
    write_tensor(enc_path, RealTensor({K, 2 * opt.pe_depth, A, E}, std::move(encoded)));
    json sidecar{{"shape", {K, A, E}}, {"bins", bins}};
    write_text(bins_path, sidecar.dump(2) + "\n");

    m.config("radar", kv.canonical());
    if (pkv) m.config("pipeline", pkv->canonical());
    m.input(a.input_h);
    m.input(a.input_v);
    m.output(out);
    m.output(enc_path);
    m.output(bins_path);
    if (a.emit_cfar) {
        const std::size_t R = FftLengths::defaults_for(cfg).range, D = FftLengths::defaults_for(cfg).doppler;
        const fs::path ph(a.output + ".cfar_h.tensor"), pv(a.output + ".cfar_v.tensor");
        write_tensor(ph, RealTensor({h.size(), R, D}, std::move(mask_h)));
        write_tensor(pv, RealTensor({v.size(), R, D}, std::move(mask_v)));
        m.output(ph);
        m.output(pv);
    }
    m.param("cfar", {{"guard", opt.cfar.guard},
                     {"reference", opt.cfar.reference},
                     {"window", opt.cfar.window == CfarWindow::per_side ? "per_side" : "total"},
                     {"input", opt.cfar_input == CfarInput::summed ? "summed" : "per_antenna"},
                     {"pfa", opt.cfar.pfa}});
    m.param("pe_depth", opt.pe_depth);
    m.param("bin_merge", opt.merge == BinMerge::union_uniform ? "union" : "intersection");
    m.write(out);
    return 0;
}

// ---------------------------------------------------------------- eval

std::map<std::int64_t, KeypointSet> keypoints_from_json(const json& j, const std::string& origin) {
    if (!j.is_array()) throw FormatError(origin + ": expected an array of frames");
    std::map<std::int64_t, KeypointSet> out;
    for (const auto& fr : j) {
        try {
            const auto frame = fr.at("frame").get<std::int64_t>();
            KeypointSet k;
            k.area = fr.at("area").get<double>();
            for (const auto& jt : fr.at("joints")) {
                if (!jt.contains("name")) throw FormatError(origin + ": frame " + std::to_string(frame) + ": joint without a name");
                const auto name = jt["name"].get<std::string>();
                const auto idx = joint_index(name);
                if (!idx) throw FormatError(origin + ": unknown joint `" + name + "`");
                k.joints[*idx] = {jt.at("x").get<double>(), jt.at("y").get<double>(), jt.value("v", 1) != 0};
            }
            if (!out.emplace(frame, k).second) throw FormatError(origin + ": duplicate frame " + std::to_string(frame));
        } catch (const json::exception& e) {
            throw FormatError(origin + ": " + e.what());
        }
    }
    return out;
}

struct EvalArgs {
    std::string pred, gt, oks_config, output;
};

int run_eval(const EvalArgs& a) {
    Manifest m("eval");
    OksParams params = OksParams::defaults();
    if (!a.oks_config.empty()) {
        const auto kv = KeyValueConfig::load(a.oks_config);
        params = OksParams::from(kv);
        m.config("oks", kv.canonical());
    }
    const auto pred = keypoints_from_json(read_json(a.pred, ErrorKind::format), a.pred);
    const auto gt = keypoints_from_json(read_json(a.gt, ErrorKind::format), a.gt);
    if (gt.empty()) throw FormatError(a.gt + ": no frames");

    json frames = json::array();
    std::vector<double> values;
    for (const auto& [frame, g] : gt) {
        auto it = pred.find(frame);
        if (it == pred.end()) throw FormatError(a.pred + ": missing frame " + std::to_string(frame));
        const double o = oks(it->second, g, params);
        values.push_back(o);
        frames.push_back({{"frame", frame}, {"oks", o}});
    }
    const auto s = ap_summary(values);
    json table = json::array();
    for (std::size_t k = 0; k < kOksThresholdCount; ++k) {
        table.push_back({{"threshold", oks_threshold(k)}, {"ap", s.per_threshold[k]}});
    }
    json out{{"ap", s.ap}, {"ap50", s.ap50}, {"ap75", s.ap75}, {"per_threshold", table}, {"frames", frames}};
    write_text(a.output, out.dump(2) + "\n");
    std::cout << "AP " << s.ap << "  AP50 " << s.ap50 << "  AP75 " << s.ap75 << '\n';

    m.input(a.pred);
    m.input(a.gt);
    m.output(a.output);
    m.write(a.output);
    return 0;
}

// ---------------------------------------------------------------- fuse

struct FuseArgs {
    std::string a, b, output;
    int layer = 1;
};

int run_fuse(const FuseArgs& a) {
    Manifest m("fuse");
    FeatureTensor f1{read_real_tensor(a.a), a.layer, FeatureSource::fft_branch, 0};
    FeatureTensor f2{read_real_tensor(a.b), a.layer, FeatureSource::probpe_branch, 0};
    f1.validate();
    f2.validate();
    write_tensor(a.output, fuse_add(f1, f2).values);
    m.input(a.a);
    m.input(a.b);
    m.output(a.output);
    m.param("layer", a.layer);
    m.write(a.output);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-radar FMCW feature pipeline"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "synthesize raw ADC frames for one radar");
    s->add_option("--scene", sim.scene, "scene JSON")->required()->check(CLI::ExistingFile);
    s->add_option("--config", sim.config, "radar config")->required()->check(CLI::ExistingFile);
    s->add_option("--output", sim.output, "raw ADC output")->required();
    s->add_option("--radar", sim.radar, "horizontal or vertical");
    s->add_option("--frames", sim.frames, "number of frames");
    s->add_option("--seed", sim.seed, "noise seed (overrides the scene)");
    s->add_option("--lanes", sim.lanes, "LVDS lane count");

    HeatmapArgs hm;
    auto* h = app.add_subcommand("heatmap", "range-Doppler-angle or range-Doppler maps");
    h->add_option("input", hm.input, "raw ADC file")->required()->check(CLI::ExistingFile);
    h->add_option("--config", hm.config, "radar config")->required()->check(CLI::ExistingFile);
    h->add_option("--output", hm.output, "tensor output")->required();
    h->add_option("--branch", hm.branch, "fft or rd");
    h->add_option("--radar", hm.radar, "horizontal or vertical");
    h->add_option("--doppler-keep", hm.doppler_keep, "Doppler bins kept (fft branch)");
    h->add_option("--doppler-window", hm.doppler_window, "velocity window as a fraction of the Doppler axis");
    h->add_option("--lanes", hm.lanes, "LVDS lane count");

    ProbmapArgs pm;
    auto* p = app.add_subcommand("probmap", "CFAR-guided probability maps and encodings");
    p->add_option("horizontal", pm.input_h, "horizontal radar ADC file")->required()->check(CLI::ExistingFile);
    p->add_option("vertical", pm.input_v, "vertical radar ADC file")->required()->check(CLI::ExistingFile);
    p->add_option("--config", pm.config, "radar config")->required()->check(CLI::ExistingFile);
    p->add_option("--cfar-config", pm.cfar_config, "pipeline config")->check(CLI::ExistingFile);
    p->add_option("--output", pm.output, "probability map tensor")->required();
    p->add_option("--cfar-guard", pm.guard, "guard cells per side");
    p->add_option("--cfar-ref", pm.reference, "reference cells per side");
    p->add_option("--pfa", pm.pfa, "false-alarm probability");
    p->add_option("--pe-depth", pm.pe_depth, "encoding depth per coordinate");
    p->add_flag("--emit-cfar", pm.emit_cfar, "also write the detection masks");
    p->add_option("--lanes", pm.lanes, "LVDS lane count");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "OKS and AP for keypoint predictions");
    e->add_option("pred", ev.pred, "predicted keypoints JSON")->required()->check(CLI::ExistingFile);
    e->add_option("gt", ev.gt, "ground-truth keypoints JSON")->required()->check(CLI::ExistingFile);
    e->add_option("--oks-config", ev.oks_config, "per-joint sigma config")->check(CLI::ExistingFile);
    e->add_option("--output", ev.output, "metrics JSON")->required();

    FuseArgs fu;
    auto* f = app.add_subcommand("fuse", "element-wise sum of two feature tensors");
    f->add_option("a", fu.a, "first tensor")->required()->check(CLI::ExistingFile);
    f->add_option("b", fu.b, "second tensor")->required()->check(CLI::ExistingFile);
    f->add_option("--output", fu.output, "fused tensor")->required();
    f->add_option("--layer", fu.layer, "encoder layer 1..3");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? 0 : exit_code(ErrorKind::config);
    }

    try {
        if (*s) return run_simulate(sim);
        if (*h) return run_heatmap(hm);
        if (*p) return run_probmap(pm);
        if (*e) return run_eval(ev);
        if (*f) return run_fuse(fu);
    } catch (const Error& err) {
        note(LogLevel::quiet, err.what());
        return exit_code(err.kind());
    } catch (const std::exception& err) {
        note(LogLevel::quiet, std::string("internal error: ") + err.what());
        return 1;
    }
    return 0;
}
