#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>

#include "metalert/store.hpp"

using namespace metalert;
using namespace metalert::core;
using namespace metalert::store;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("metalert-test-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

learning::RateTable random_table(std::mt19937_64& rng) {
    learning::RateTable table;
    const char* sensors[] = {"snort", "kippo", "suricata"};
    for (const char* sensor : sensors) {
        const double rtp = unit(rng);
        table.insert(RateEntry::checked(sensor, "ssh", std::nullopt, rtp, 1.0 - rtp, unit(rng),
                                        unit(rng), unit(rng)));
        if (rng() % 2 == 0) {
            const double s_rtp = unit(rng);
            table.insert(RateEntry::checked(sensor, "ssh", "sig-ssh-01", s_rtp, 1.0 - s_rtp,
                                            unit(rng), unit(rng), unit(rng)));
        }
    }
    return table;
}

MetaAlert random_meta(std::mt19937_64& rng, int ordinal) {
    MetaAlert m;
    char id[24];
    std::snprintf(id, sizeof(id), "meta-%06d", ordinal);
    m.meta_id = id;
    m.signature_id = "sig-ssh-01";
    m.socket = {"10.0.0." + std::to_string(rng() % 200 + 1),
                static_cast<std::uint16_t>(rng() % 65536), "192.168.1.1", 22};
    m.window_start = {static_cast<std::int64_t>(rng() % 2'000'000'000),
                      static_cast<std::uint32_t>(rng() % 1'000'000'000)};
    m.alerted = {"snort"};
    if (rng() % 2 == 0) m.alerted.push_back("kippo");
    if (rng() % 2 == 0)
        m.silent.push_back("suricata");
    else
        m.alerted.push_back("suricata");
    for (int i = 0; i < 3; ++i) m.sessions.push_back("e" + std::to_string(rng() % 100));
    m.open = false;
    if (rng() % 2 == 0) m.ptrue = unit(rng);
    if (rng() % 2 == 0) m.pfalse = unit(rng);
    m.tag = static_cast<Tag>(rng() % 3);
    if (m.tag == Tag::Pending && rng() % 2 == 0) m.label = Label::Benevolent;
    return m;
}

}  // namespace

TEST_CASE("rate table round-trips bit-exactly") {
    TempDir dir;
    StoreLayout layout{dir.path};
    ensure_layout(layout);

    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        const learning::RateTable table = random_table(rng);
        save_rates(table, layout);
        const learning::RateTable loaded = load_rates(layout);

        REQUIRE(loaded.entries().size() == table.entries().size());
        for (const auto& e : table.entries()) {
            const RateEntry* back =
                e.signature_id ? loaded.find_signature(e.sensor_id, e.protocol_id, *e.signature_id)
                               : loaded.find_protocol(e.sensor_id, e.protocol_id);
            REQUIRE(back != nullptr);
            CHECK(*back == e);  // exact double equality
        }
    }
}

TEST_CASE("empty rate table loads as empty") {
    TempDir dir;
    StoreLayout layout{dir.path};
    ensure_layout(layout);
    save_rates(learning::RateTable{}, layout);
    CHECK(load_rates(layout).entries().empty());
}

TEST_CASE("corrupt files raise a parse error naming the file") {
    TempDir dir;
    StoreLayout layout{dir.path};
    ensure_layout(layout);
    {
        std::ofstream out(layout.rates_dir() / "kippo.json");
        out << "{\"sensor_id\": \"kippo\", \"entries\": [ {\"protocol";  // truncated
    }
    try {
        load_rates(layout);
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.code() == "store/parse-error");
        CHECK(std::string(e.what()).find("kippo.json") != std::string::npos);
    }
}

TEST_CASE("weights round-trip bit-exactly with config echo") {
    TempDir dir;
    StoreLayout layout{dir.path};
    ensure_layout(layout);

    std::mt19937_64 rng(77);
    WeightsRecord record;
    record.weights.signature_id = "sig-ssh-01";
    for (auto& row : record.weights.hidden)
        for (auto& v : row) v = unit(rng) * 10 - 5;
    for (auto& v : record.weights.output) v = unit(rng) * 10 - 5;
    record.trained_at = "2016-05-12T10:00:00Z";
    record.config = {0.5, 0.7, 0.02, 20000, 42};

    save_weights(record, layout);
    const WeightsRecord loaded = load_weights(layout, "sig-ssh-01");
    CHECK(loaded.weights == record.weights);
    CHECK(loaded.trained_at == record.trained_at);
    CHECK(loaded.config.learning_rate == record.config.learning_rate);
    CHECK(loaded.config.momentum == record.config.momentum);
    CHECK(loaded.config.seed == record.config.seed);

    const auto all = load_all_weights(layout.weights_dir());
    REQUIRE(all.contains("sig-ssh-01"));
    CHECK(all.at("sig-ssh-01") == record.weights);
}

TEST_CASE("unknown signature raises not-found") {
    TempDir dir;
    StoreLayout layout{dir.path};
    ensure_layout(layout);
    try {
        load_weights(layout, "sig-none");
        FAIL("expected not-found");
    } catch (const Error& e) {
        CHECK(e.code() == "store/not-found");
    }
}

TEST_CASE("meta-alert logs preserve order and content") {
    TempDir dir;
    std::mt19937_64 rng(99);
    std::vector<MetaAlert> metas;
    for (int i = 0; i < 20; ++i) metas.push_back(random_meta(rng, i + 1));

    const auto path = dir.path / "metas.jsonl";
    save_metas(metas, path);
    const auto loaded = load_metas(path);
    REQUIRE(loaded.size() == 20);
    CHECK(loaded == metas);

    SUBCASE("append extends the log") {
        append_metas(metas, path);
        CHECK(load_metas(path).size() == 40);
    }

    SUBCASE("a corrupt line names the file and line") {
        {
            std::ofstream out(path, std::ios::app);
            out << "{broken\n";
        }
        try {
            load_metas(path);
            FAIL("expected parse error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("line 21") != std::string::npos);
        }
    }
}

TEST_CASE("registry round-trip") {
    TempDir dir;
    const Registry registry = validate_registry(
        {{"snort", "Snort IDS"}, {"kippo", "Kippo"}}, {{"ssh"}, {"http"}},
        {{"sig-ssh-01", "ssh", "probe"}, {"sig-http-01", "http", "scan"}},
        {{"snort", "sig-ssh-01"}, {"kippo", "sig-ssh-01"}, {"snort", "sig-http-01"}});
    const auto path = dir.path / "registry.json";
    save_registry(registry, path);
    const Registry loaded = load_registry(path);
    CHECK(loaded.sensors() == registry.sensors());
    CHECK(loaded.protocols() == registry.protocols());
    CHECK(loaded.signatures() == registry.signatures());
    CHECK(loaded.capabilities() == registry.capabilities());

    CHECK_THROWS_AS(load_registry(dir.path / "missing.json"), Error);
}

TEST_CASE("history round-trip at full precision") {
    TempDir dir;
    StoreLayout layout{dir.path};
    ensure_layout(layout);

    std::mt19937_64 rng(111);
    std::vector<double> history;
    for (int i = 0; i < 500; ++i) history.push_back(unit(rng));
    save_history("sig-ssh-01", history, layout);
    CHECK(load_history(layout, "sig-ssh-01") == history);
}

TEST_CASE("writes are atomic: no temp files survive, content swaps whole") {
    TempDir dir;
    const auto path = dir.path / "file.json";
    write_atomic(path, "first");
    write_atomic(path, "second");
    std::ifstream in(path);
    std::string content;
    std::getline(in, content);
    CHECK(content == "second");

    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir.path)) {
        (void)entry;
        ++files;
    }
    CHECK(files == 1);
}

TEST_CASE("atomic writes accept bare relative filenames") {
    const fs::path previous = fs::current_path();
    TempDir dir;
    fs::current_path(dir.path);
    write_atomic("bare.json", "{}");
    CHECK(fs::exists(dir.path / "bare.json"));
    fs::current_path(previous);
}

TEST_CASE("current_timestamp honors SOURCE_DATE_EPOCH") {
    setenv("SOURCE_DATE_EPOCH", "1463047200", 1);
    CHECK(current_timestamp() == "2016-05-12T10:00:00Z");
    unsetenv("SOURCE_DATE_EPOCH");
    CHECK(current_timestamp() != "2016-05-12T10:00:00Z");
}
