#include "doctest.h"

#include <random>
#include <sstream>

#include "metalert/core.hpp"
#include "metalert/ingest.hpp"

using namespace metalert;
using namespace metalert::core;
using namespace metalert::ingest;

namespace {

Registry ssh_registry() {
    return validate_registry(
        {{"snort", ""}, {"kippo", ""}, {"suricata", ""}}, {{"ssh"}},
        {{"sig-ssh-01", "ssh", ""}},
        {{"snort", "sig-ssh-01"}, {"kippo", "sig-ssh-01"}, {"suricata", "sig-ssh-01"}});
}

const char* kGoodLine =
    R"({"ts":"2016-05-12T10:00:00Z","sensor":"kippo","signature":"sig-ssh-01",)"
    R"("src_ip":"10.0.0.1","src_port":40000,"dst_ip":"192.168.1.1","dst_port":22,)"
    R"("label":"malicious"})";

}  // namespace

TEST_CASE("a well-formed line becomes one labeled session") {
    const Registry r = ssh_registry();
    std::istringstream in(kGoodLine);
    const ParseResult result = parse_events(in, r);
    REQUIRE(result.sessions.size() == 1);
    const AlertSession& s = result.sessions.front();
    CHECK(s.session_id == "e1");
    CHECK(s.sensor_id == "kippo");
    CHECK(s.signature_id == "sig-ssh-01");
    CHECK(s.socket == SocketPair{"10.0.0.1", 40000, "192.168.1.1", 22});
    CHECK(s.label == Label::Malicious);
    CHECK(format_timestamp(s.timestamp) == "2016-05-12T10:00:00Z");
}

TEST_CASE("46 valid lines parse to 46 sessions") {
    const Registry r = ssh_registry();
    std::ostringstream text;
    const char* sensors[] = {"snort", "kippo", "suricata"};
    for (int i = 0; i < 46; ++i) {
        text << R"({"ts":"2016-05-12T10:)" << (i < 10 ? "0" : "") << i
             << R"(:00Z","sensor":")" << sensors[i % 3]
             << R"(","signature":"sig-ssh-01","src_ip":"10.0.0.)" << (i % 200 + 1)
             << R"(","src_port":)" << 40000 + i
             << R"(,"dst_ip":"192.168.1.1","dst_port":22,"label":"malicious"})" << "\n";
    }
    std::istringstream in(text.str());
    CHECK(parse_events(in, r).sessions.size() == 46);
}

TEST_CASE("malformed lines") {
    const Registry r = ssh_registry();
    const std::string missing_port =
        R"({"ts":"2016-05-12T10:00:00Z","sensor":"kippo","signature":"sig-ssh-01",)"
        R"("src_ip":"10.0.0.1","src_port":40000,"dst_ip":"192.168.1.1"})";

    SUBCASE("strict mode reports the line number") {
        std::istringstream in(std::string(kGoodLine) + "\n" + missing_port + "\n");
        try {
            parse_events(in, r, ParseMode::Strict);
            FAIL("expected malformed-line");
        } catch (const Error& e) {
            CHECK(e.code() == "ingest/malformed-line");
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }

    SUBCASE("lenient mode skips and records") {
        std::istringstream in(std::string(kGoodLine) + "\n" + missing_port + "\n" + kGoodLine +
                              "\n");
        const ParseResult result = parse_events(in, r, ParseMode::Lenient);
        CHECK(result.sessions.size() == 2);
        REQUIRE(result.skipped.size() == 1);
        CHECK(result.skipped.front().line == 2);
        // Session ids keep their originating line numbers.
        CHECK(result.sessions[1].session_id == "e3");
    }

    SUBCASE("bad port, bad ip, bad label, bad json") {
        for (const char* bad : {
                 R"({"ts":"2016-05-12T10:00:00Z","sensor":"kippo","signature":"sig-ssh-01","src_ip":"10.0.0.1","src_port":70000,"dst_ip":"192.168.1.1","dst_port":22})",
                 R"({"ts":"2016-05-12T10:00:00Z","sensor":"kippo","signature":"sig-ssh-01","src_ip":"999.0.0.1","src_port":1,"dst_ip":"192.168.1.1","dst_port":22})",
                 R"({"ts":"2016-05-12T10:00:00Z","sensor":"kippo","signature":"sig-ssh-01","src_ip":"10.0.0.1","src_port":1,"dst_ip":"192.168.1.1","dst_port":22,"label":"evil"})",
                 R"({"ts":"12 May 2016","sensor":"kippo","signature":"sig-ssh-01","src_ip":"10.0.0.1","src_port":1,"dst_ip":"192.168.1.1","dst_port":22})",
                 "{not json",
             }) {
            std::istringstream in(bad);
            CHECK_THROWS_AS(parse_events(in, r, ParseMode::Strict), Error);
        }
    }
}

TEST_CASE("unknown sensor or signature is a hard error even in lenient mode") {
    const Registry r = ssh_registry();
    const std::string unknown_sensor =
        R"({"ts":"2016-05-12T10:00:00Z","sensor":"nmap","signature":"sig-ssh-01",)"
        R"("src_ip":"10.0.0.1","src_port":1,"dst_ip":"192.168.1.1","dst_port":22})";
    std::istringstream in(unknown_sensor);
    CHECK_THROWS_AS(parse_events(in, r, ParseMode::Lenient), Error);

    const std::string unknown_signature =
        R"({"ts":"2016-05-12T10:00:00Z","sensor":"kippo","signature":"sig-http-9",)"
        R"("src_ip":"10.0.0.1","src_port":1,"dst_ip":"192.168.1.1","dst_port":22})";
    std::istringstream in2(unknown_signature);
    CHECK_THROWS_AS(parse_events(in2, r, ParseMode::Lenient), Error);
}

TEST_CASE("parse of serialize is the identity on session lists") {
    const Registry r = ssh_registry();
    std::mt19937_64 rng(5);
    const char* sensors[] = {"snort", "kippo", "suricata"};

    std::ostringstream text;
    for (int i = 0; i < 200; ++i) {
        text << R"({"ts":"2016-05-12T10:00:)" << (i % 50 + 10) << '.' << (rng() % 900 + 100)
             << R"(Z","sensor":")" << sensors[rng() % 3]
             << R"(","signature":"sig-ssh-01","src_ip":"10.0.)" << rng() % 200 << '.'
             << rng() % 200 + 1 << R"(","src_port":)" << rng() % 65536
             << R"(,"dst_ip":"192.168.1.1","dst_port":22)"
             << (rng() % 3 == 0 ? R"(,"label":"benevolent")"
                                : (rng() % 2 ? R"(,"label":"malicious")" : ""))
             << "}\n";
    }
    std::istringstream first_in(text.str());
    const auto first = parse_events(first_in, r).sessions;

    std::ostringstream serialized;
    serialize_events(first, serialized);
    std::istringstream second_in(serialized.str());
    const auto second = parse_events(second_in, r).sessions;
    CHECK(first == second);
}

TEST_CASE("lenient mode never yields fewer sessions than strict on the surviving lines") {
    const Registry r = ssh_registry();
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::ostringstream text;
        int good = 0;
        for (int i = 0; i < 30; ++i) {
            if (rng() % 4 == 0) {
                text << "{broken\n";
            } else {
                text << kGoodLine << "\n";
                ++good;
            }
        }
        std::istringstream in(text.str());
        const ParseResult lenient = parse_events(in, r, ParseMode::Lenient);
        CHECK(lenient.sessions.size() == static_cast<std::size_t>(good));
        CHECK(lenient.sessions.size() + lenient.skipped.size() == 30);
    }
}

TEST_CASE("summarize_traffic") {
    const Registry r = ssh_registry();

    SUBCASE("declared totals win") {
        TrafficSummary declared;
        declared.protocol_totals["ssh"] = {15, 5};
        declared.signature_malicious_totals["sig-ssh-01"] = 15;
        const TrafficSummary summary = summarize_traffic({}, declared, r);
        CHECK(summary.protocol_totals.at("ssh").malicious == 15);
        CHECK(summary.protocol_totals.at("ssh").benevolent == 5);
        CHECK(summary.signature_malicious_totals.at("sig-ssh-01") == 15);
    }

    SUBCASE("empty input with declared zeros") {
        TrafficSummary declared;
        declared.protocol_totals["ssh"] = {0, 0};
        const TrafficSummary summary = summarize_traffic({}, declared, r);
        CHECK(summary.protocol_totals.at("ssh").malicious == 0);
    }

    SUBCASE("negative declared totals rejected") {
        TrafficSummary declared;
        declared.protocol_totals["ssh"] = {15, -1};
        CHECK_THROWS_AS(summarize_traffic({}, declared, r), Error);
    }

    SUBCASE("per-signature sum must stay within the protocol total") {
        TrafficSummary declared;
        declared.protocol_totals["ssh"] = {10, 0};
        declared.signature_malicious_totals["sig-ssh-01"] = 11;
        CHECK_THROWS_AS(summarize_traffic({}, declared, r), Error);
    }

    SUBCASE("derived from labeled sessions, counting traces not alerts") {
        // Two sensors alerting on the same trace must count it once.
        std::vector<AlertSession> sessions;
        const SocketPair socket{"10.0.0.1", 40000, "192.168.1.1", 22};
        const Timestamp ts = parse_timestamp("2016-05-12T10:00:00Z");
        sessions.push_back({"e1", ts, "kippo", "sig-ssh-01", socket, Label::Malicious});
        sessions.push_back({"e2", ts, "snort", "sig-ssh-01", socket, Label::Malicious});
        const SocketPair other{"10.0.0.2", 40001, "192.168.1.1", 22};
        sessions.push_back({"e3", ts, "snort", "sig-ssh-01", other, Label::Benevolent});

        const TrafficSummary summary = summarize_traffic(sessions, std::nullopt, r);
        CHECK(summary.protocol_totals.at("ssh").malicious == 1);
        CHECK(summary.protocol_totals.at("ssh").benevolent == 1);
        CHECK(summary.signature_malicious_totals.at("sig-ssh-01") == 1);
    }

    SUBCASE("neither labels nor declared totals") {
        std::vector<AlertSession> sessions;
        sessions.push_back({"e1", {}, "kippo", "sig-ssh-01",
                            {"10.0.0.1", 1, "192.168.1.1", 22}, std::nullopt});
        CHECK_THROWS_AS(summarize_traffic(sessions, std::nullopt, r), Error);
        CHECK_THROWS_AS(summarize_traffic({}, std::nullopt, r), Error);
    }
}

TEST_CASE("summary file round-trip") {
    const Registry r = ssh_registry();
    TrafficSummary summary;
    summary.protocol_totals["ssh"] = {15, 5};
    summary.signature_malicious_totals["sig-ssh-01"] = 15;

    std::ostringstream out;
    write_summary(summary, out);
    std::istringstream in(out.str());
    CHECK(read_summary(in, r) == summary);

    std::istringstream bad("{nope");
    CHECK_THROWS_AS(read_summary(bad, r), Error);
}
