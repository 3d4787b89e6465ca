#include "metalert/store.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace metalert::store {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

[[noreturn]] void parse_failure(const std::filesystem::path& path, const std::string& detail) {
    throw Error("store/parse-error", "cannot read '" + path.string() + "': " + detail);
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) parse_failure(path, "file not readable");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ordered_json socket_to_json(const core::SocketPair& s) {
    return {{"src_ip", s.src_ip},
            {"src_port", s.src_port},
            {"dst_ip", s.dst_ip},
            {"dst_port", s.dst_port}};
}

core::SocketPair socket_from_json(const json& j) {
    core::SocketPair s;
    s.src_ip = j.at("src_ip").get<std::string>();
    s.src_port = j.at("src_port").get<std::uint16_t>();
    s.dst_ip = j.at("dst_ip").get<std::string>();
    s.dst_port = j.at("dst_port").get<std::uint16_t>();
    return s;
}

ordered_json meta_to_json(const core::MetaAlert& m) {
    ordered_json j;
    j["meta_id"] = m.meta_id;
    j["signature_id"] = m.signature_id;
    j["socket"] = socket_to_json(m.socket);
    j["window_start"] = core::format_timestamp(m.window_start);
    j["alerted"] = m.alerted;
    j["silent"] = m.silent;
    j["sessions"] = m.sessions;
    j["open"] = m.open;
    if (m.ptrue) j["ptrue"] = *m.ptrue;
    if (m.pfalse) j["pfalse"] = *m.pfalse;
    j["tag"] = core::to_string(m.tag);
    if (m.label) j["label"] = core::to_string(*m.label);
    return j;
}

core::MetaAlert meta_from_json(const json& j) {
    core::MetaAlert m;
    m.meta_id = j.at("meta_id").get<std::string>();
    m.signature_id = j.at("signature_id").get<std::string>();
    m.socket = socket_from_json(j.at("socket"));
    m.window_start = core::parse_timestamp(j.at("window_start").get<std::string>());
    m.alerted = j.at("alerted").get<std::vector<std::string>>();
    m.silent = j.at("silent").get<std::vector<std::string>>();
    m.sessions = j.at("sessions").get<std::vector<std::string>>();
    m.open = j.at("open").get<bool>();
    if (j.contains("ptrue")) m.ptrue = j.at("ptrue").get<double>();
    if (j.contains("pfalse")) m.pfalse = j.at("pfalse").get<double>();
    m.tag = core::parse_tag(j.at("tag").get<std::string>());
    if (j.contains("label")) m.label = core::parse_label(j.at("label").get<std::string>());
    return m;
}

}  // namespace

void ensure_layout(const StoreLayout& layout) {
    namespace fs = std::filesystem;
    fs::create_directories(layout.root);
    fs::create_directories(layout.rates_dir());
    fs::create_directories(layout.weights_dir());
    fs::create_directories(layout.metas_dir());
    fs::create_directories(layout.history_dir());
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.parent_path() / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        if (!out) throw Error("store/io-error", "cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.flush()) throw Error("store/io-error", "write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

void save_registry(const core::Registry& registry, const std::filesystem::path& path) {
    ordered_json j;
    j["sensors"] = ordered_json::array();
    for (const auto& s : registry.sensors())
        j["sensors"].push_back({{"sensor_id", s.sensor_id}, {"name", s.name}});
    j["protocols"] = ordered_json::array();
    for (const auto& p : registry.protocols())
        j["protocols"].push_back({{"protocol_id", p.protocol_id}});
    j["signatures"] = ordered_json::array();
    for (const auto& s : registry.signatures())
        j["signatures"].push_back({{"signature_id", s.signature_id},
                                   {"protocol_id", s.protocol_id},
                                   {"description", s.description}});
    j["capabilities"] = ordered_json::array();
    for (const auto& c : registry.capabilities())
        j["capabilities"].push_back(
            {{"sensor_id", c.sensor_id}, {"signature_id", c.signature_id}});
    write_atomic(path, j.dump(2) + "\n");
}

core::Registry load_registry(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(slurp(path));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        parse_failure(path, e.what());
    }
    try {
        std::vector<core::Sensor> sensors;
        for (const auto& s : j.value("sensors", json::array()))
            sensors.push_back({s.at("sensor_id").get<std::string>(),
                               s.value("name", std::string{})});
        std::vector<core::Protocol> protocols;
        for (const auto& p : j.value("protocols", json::array()))
            protocols.push_back({p.at("protocol_id").get<std::string>()});
        std::vector<core::Signature> signatures;
        for (const auto& s : j.value("signatures", json::array()))
            signatures.push_back({s.at("signature_id").get<std::string>(),
                                  s.at("protocol_id").get<std::string>(),
                                  s.value("description", std::string{})});
        std::vector<core::SensorCapability> capabilities;
        for (const auto& c : j.value("capabilities", json::array()))
            capabilities.push_back({c.at("sensor_id").get<std::string>(),
                                    c.at("signature_id").get<std::string>()});
        return core::validate_registry(std::move(sensors), std::move(protocols),
                                       std::move(signatures), std::move(capabilities));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        parse_failure(path, e.what());
    }
}

void save_rates(const learning::RateTable& table, const StoreLayout& layout) {
    std::filesystem::create_directories(layout.rates_dir());
    std::map<std::string, std::vector<const core::RateEntry*>> by_sensor;
    for (const auto& e : table.entries()) by_sensor[e.sensor_id].push_back(&e);
    for (const auto& [sensor, entries] : by_sensor) {
        ordered_json j;
        j["sensor_id"] = sensor;
        j["entries"] = ordered_json::array();
        for (const core::RateEntry* e : entries) {
            ordered_json entry;
            entry["protocol_id"] = e->protocol_id;
            if (e->signature_id) entry["signature_id"] = *e->signature_id;
            entry["rtp"] = e->rtp;
            entry["rfp"] = e->rfp;
            entry["rfn"] = e->rfn;
            entry["rtn"] = e->rtn;
            entry["pm"] = e->pm;
            j["entries"].push_back(std::move(entry));
        }
        write_atomic(layout.rates_dir() / (sensor + ".json"), j.dump(2) + "\n");
    }
}

learning::RateTable load_rates_dir(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    learning::RateTable table;
    if (!fs::exists(dir)) return table;

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    // Protocol-scope entries must land before their signature-scope siblings.
    std::vector<core::RateEntry> parsed;
    for (const auto& file : files) {
        json j;
        try {
            j = json::parse(slurp(file));
            const std::string sensor = j.at("sensor_id").get<std::string>();
            for (const auto& e : j.at("entries")) {
                std::optional<std::string> signature;
                if (e.contains("signature_id"))
                    signature = e.at("signature_id").get<std::string>();
                parsed.push_back(core::RateEntry::checked(
                    sensor, e.at("protocol_id").get<std::string>(), signature,
                    e.at("rtp").get<double>(), e.at("rfp").get<double>(),
                    e.at("rfn").get<double>(), e.at("rtn").get<double>(),
                    e.at("pm").get<double>()));
            }
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            parse_failure(file, e.what());
        }
    }
    std::stable_partition(parsed.begin(), parsed.end(),
                          [](const core::RateEntry& e) { return !e.signature_id; });
    for (auto& e : parsed) table.insert(std::move(e));
    return table;
}

learning::RateTable load_rates(const StoreLayout& layout) {
    return load_rates_dir(layout.rates_dir());
}

void save_weights(const WeightsRecord& record, const StoreLayout& layout) {
    core::validate_weights(record.weights);
    ordered_json j;
    j["signature_id"] = record.weights.signature_id;
    j["hidden"] = record.weights.hidden;
    j["output"] = record.weights.output;
    j["trained_at"] = record.trained_at;
    j["config"] = {{"learning_rate", record.config.learning_rate},
                   {"momentum", record.config.momentum},
                   {"goal", record.config.goal},
                   {"max_iterations", record.config.max_iterations},
                   {"seed", record.config.seed}};
    write_atomic(layout.weights_dir() / (record.weights.signature_id + ".json"),
                 j.dump(2) + "\n");
}

namespace {

WeightsRecord weights_from_file(const std::filesystem::path& path) {
    WeightsRecord record;
    try {
        json j = json::parse(slurp(path));
        record.weights.signature_id = j.at("signature_id").get<std::string>();
        record.weights.hidden = j.at("hidden").get<std::array<std::array<double, 3>, 3>>();
        record.weights.output = j.at("output").get<std::array<double, 4>>();
        record.trained_at = j.value("trained_at", std::string{});
        if (j.contains("config")) {
            const auto& c = j.at("config");
            record.config.learning_rate = c.value("learning_rate", 0.5);
            record.config.momentum = c.value("momentum", 0.7);
            record.config.goal = c.value("goal", 0.02);
            record.config.max_iterations = c.value("max_iterations", 20000);
            record.config.seed = c.value("seed", std::uint64_t{1});
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        parse_failure(path, e.what());
    }
    core::validate_weights(record.weights);
    return record;
}

}  // namespace

WeightsRecord load_weights(const StoreLayout& layout, const std::string& signature_id) {
    const auto path = layout.weights_dir() / (signature_id + ".json");
    if (!std::filesystem::exists(path))
        throw Error("store/not-found", "no weights stored for signature '" + signature_id + "'");
    return weights_from_file(path);
}

std::map<std::string, core::MlpWeights> load_all_weights(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::map<std::string, core::MlpWeights> out;
    if (!fs::exists(dir)) return out;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        WeightsRecord record = weights_from_file(file);
        out[record.weights.signature_id] = record.weights;
    }
    return out;
}

void save_metas(std::span<const core::MetaAlert> metas, const std::filesystem::path& path) {
    std::string content;
    for (const auto& m : metas) content += meta_to_json(m).dump() + "\n";
    write_atomic(path, content);
}

void append_metas(std::span<const core::MetaAlert> metas, const std::filesystem::path& path) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error("store/io-error", "cannot append to '" + path.string() + "'");
    for (const auto& m : metas) out << meta_to_json(m).dump() << '\n';
}

std::vector<core::MetaAlert> load_metas(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) parse_failure(path, "file not readable");
    std::vector<core::MetaAlert> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(meta_from_json(json::parse(line)));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            parse_failure(path, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void save_history(const std::string& signature_id, std::span<const double> history,
                  const StoreLayout& layout) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < history.size(); ++i)
        out << (i + 1) << ' ' << history[i] << '\n';
    write_atomic(layout.history_dir() / (signature_id + ".txt"), out.str());
}

std::vector<double> load_history(const StoreLayout& layout, const std::string& signature_id) {
    const auto path = layout.history_dir() / (signature_id + ".txt");
    std::ifstream in(path);
    if (!in) parse_failure(path, "file not readable");
    std::vector<double> out;
    std::size_t iteration;
    double pi;
    while (in >> iteration >> pi) out.push_back(pi);
    return out;
}

std::string current_timestamp() {
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        core::Timestamp ts;
        ts.seconds = std::atoll(epoch);
        return core::format_timestamp(ts);
    }
    const auto now = std::chrono::system_clock::now();
    core::Timestamp ts;
    ts.seconds = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    return core::format_timestamp(ts);
}

}  // namespace metalert::store
