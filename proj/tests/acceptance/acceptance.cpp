// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
//   tcenter_acceptance [NAME...]   run only the named criteria

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/core.h>
#include <httplib.h>

#include "process.hpp"
#include "tcenter/api.hpp"
#include "tcenter/center.hpp"
#include "tcenter/error.hpp"
#include "tcenter/persistence.hpp"

using namespace tcenter;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::chrono::milliseconds limit;
    std::function<Outcome()> run;
};

// Collects the first few failures of a criterion.
class Checker {
public:
    void expect(bool cond, const std::string& what) {
        if (cond) return;
        ++failures_;
        if (failures_ <= 5) notes_ += (notes_.empty() ? "" : "; ") + what;
    }
    bool ok() const { return failures_ == 0; }
    Outcome outcome(std::string summary) const {
        if (ok()) return {true, std::move(summary)};
        return {false, fmt::format("{} failure(s): {}", failures_, notes_)};
    }

private:
    int failures_ = 0;
    std::string notes_;
};

class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        std::random_device rd;
        path_ = fs::temp_directory_path() / fmt::format("tcenter-{}-{:08x}{:08x}", tag, rd(), rd());
        fs::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

CenterOptions two_languages() {
    CenterOptions o;
    o.languages = {Language{"es", "Spanish", {"á", "é", "í", "ó", "ú", "ü", "ñ", "¿", "¡"}},
                   Language{"fr", "French", {"é", "è", "ç"}}};
    o.admins = {"admin"};
    return o;
}

std::string config_json() {
    return json{{"listen", "127.0.0.1:0"},
                {"data_dir", "data"},
                {"docs_dir", "docs"},
                {"admins", {"admin"}},
                {"languages",
                 {{{"code", "es"}, {"name", "Spanish"}}, {{"code", "fr"}, {"name", "French"}}}}}
        .dump(2);
}

// Items i000.. spread over `pages` pages.
CatalogDocument generated_catalog(std::size_t n, std::size_t pages) {
    CatalogDocument doc;
    for (std::size_t p = 0; p < pages; ++p) {
        doc.pages.push_back({fmt::format("page{}", p), fmt::format("/p{}", p), fmt::format("Page {}", p), {}});
    }
    for (std::size_t i = 0; i < n; ++i) {
        doc.pages[i % pages].segments.push_back(CatalogSegment{
            fmt::format("i{:03}", i), fmt::format("source text {}", i), Category::other, "", ""});
    }
    std::erase_if(doc.pages, [](const CatalogPage& p) { return p.segments.empty(); });
    return doc;
}

RubricScores random_rubric(std::mt19937_64& rng) {
    auto pick = [&](int max) { return static_cast<int>(rng() % static_cast<unsigned>(max + 1)); };
    return {pick(3), pick(3), pick(1), pick(1), pick(1), pick(1), pick(3)};
}

constexpr RubricScores kPerfect{3, 3, 1, 1, 1, 1, 3};

// ---------------------------------------------------------------------------
// HTTP helpers

struct Reply {
    int status = -1; // -1: no response
    json body;
};

class Api {
public:
    explicit Api(int port) : client_("127.0.0.1", port) {
        client_.set_connection_timeout(std::chrono::seconds(5));
        client_.set_read_timeout(std::chrono::seconds(10));
    }

    Reply get(const std::string& path, const std::string& token = {}) {
        return wrap(token.empty() ? client_.Get(path) : client_.Get(path, auth(token)));
    }
    Reply post(const std::string& path, const json& body, const std::string& token = {}) {
        return wrap(token.empty() ? client_.Post(path, body.dump(), "application/json")
                                  : client_.Post(path, auth(token), body.dump(), "application/json"));
    }
    httplib::Result raw_get(const std::string& path, const std::string& token) {
        return client_.Get(path, auth(token));
    }

private:
    static httplib::Headers auth(const std::string& token) {
        return {{"Authorization", "Bearer " + token}};
    }
    static Reply wrap(const httplib::Result& res) {
        Reply r;
        if (!res) return r;
        r.status = res->status;
        try {
            r.body = res->body.empty() ? json() : json::parse(res->body);
        } catch (const json::exception&) {
            r.body = res->body;
        }
        return r;
    }

    httplib::Client client_;
};

// `tcenter serve` in a child process.
class Server {
public:
    Server(const std::string& config, const std::string& log)
        : proc_({TCENTER_CLI, "serve", "--config", config}, log) {
        const std::string line = proc_.read_line();
        const auto colon = line.rfind(':');
        if (line.rfind("listening on ", 0) != 0 || colon == std::string::npos) {
            throw std::runtime_error("server did not start: '" + line + "'");
        }
        port_ = std::stoi(line.substr(colon + 1));
    }

    int port() const { return port_; }
    acceptance::Process& process() { return proc_; }

    // SIGTERM and wait; true when the server flushed and exited 0.
    bool shutdown() {
        proc_.kill(SIGTERM);
        const std::string rest = proc_.read_all();
        const int status = proc_.wait();
        return WIFEXITED(status) && WEXITSTATUS(status) == 0 &&
               rest.find("stopped") != std::string::npos;
    }

private:
    acceptance::Process proc_;
    int port_ = 0;
};

// ---------------------------------------------------------------------------
// Criteria

Outcome rubric_arithmetic() {
    Checker c;
    int vectors = 0;
    for (int s = 0; s <= 3; ++s)
    for (int co = 0; co <= 3; ++co)
    for (int m = 0; m <= 1; ++m)
    for (int sp = 0; sp <= 1; ++sp)
    for (int st = 0; st <= 1; ++st)
    for (int p = 0; p <= 1; ++p)
    for (int msg = 0; msg <= 3; ++msg) {
        const RubricScores r{s, co, m, sp, st, p, msg};
        const int brute = s + co + m + sp + st + p + msg;
        c.expect(rubric_total(r) == brute, fmt::format("vector #{} total mismatch", vectors));
        ++vectors;
    }
    c.expect(vectors == 1024, "enumerated " + std::to_string(vectors) + " vectors");
    c.expect(rubric_total(kPerfect) == 13, "all-maximum vector is not 13");

    int rejected = 0;
    for (const auto& field : kRubricFields) {
        for (const int bad : {-1, field.max + 1, 100}) {
            RubricScores r = kPerfect;
            r.*field.member = bad;
            try {
                rubric_total(r);
                c.expect(false, fmt::format("{}={} accepted", field.name, bad));
            } catch (const Error& e) {
                c.expect(e.code() == ErrorCode::validation && e.detail().value("field", "") == field.name,
                         fmt::format("{}={} rejected without naming the field", field.name, bad));
                ++rejected;
            }
        }
    }
    return c.outcome(fmt::format("{} vectors summed, max 13, {} out-of-range vectors rejected", vectors, rejected));
}

Outcome assessor_worksheets() {
    Checker c;
    const auto fixture = json::parse(read_file(TCENTER_FIXTURES "/assessor_worksheets.json"));
    std::vector<int> totals;
    for (const auto& ws : fixture.at("worksheets")) {
        const int total = rubric_total(rubric_from_json(ws.at("rubric")));
        c.expect(total == ws.at("reported_total").get<int>(),
                 fmt::format("row {}: {} != {}", ws.at("row").get<int>(), total, ws.at("reported_total").get<int>()));
        totals.push_back(total);
    }
    // Row order of the published table, then the multiset as listed in the requirement.
    c.expect(totals == std::vector<int>{1, 8, 1, 4, 2, 13, 3, 13, 1}, "row-order totals differ");
    std::vector<int> got = totals, want{1, 1, 8, 4, 2, 13, 3, 13, 1};
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    c.expect(got == want, "totals multiset differs");
    std::string shown;
    for (int t : totals) shown += (shown.empty() ? "" : ",") + std::to_string(t);
    return c.outcome("totals " + shown);
}

// Independent scorer: recomputes every score from the model and selection-sorts.
struct OracleItem {
    std::string id;
    std::uint64_t views = 0;
    std::set<std::string> requesters;
    bool translated = false;
    std::vector<int> review_totals; // of the current version
};

std::vector<std::string> oracle_ranking(const std::vector<OracleItem>& items) {
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& it : items) {
        double score = 1.0 * std::log2(1.0 + static_cast<double>(it.views)) +
                       2.0 * static_cast<double>(it.requesters.size());
        if (!it.translated) {
            score += 3.0;
        } else {
            double q = 0.5;
            if (!it.review_totals.empty()) {
                int sum = 0;
                for (int t : it.review_totals) sum += t;
                q = static_cast<double>(sum) / (13.0 * static_cast<double>(it.review_totals.size()));
            }
            score += 1.0 * (1.0 - q);
        }
        scored.emplace_back(score, it.id);
    }
    std::vector<std::string> order;
    while (!scored.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < scored.size(); ++i) {
            const bool higher = scored[i].first > scored[best].first;
            const bool tie_lower_id = scored[i].first == scored[best].first && scored[i].second < scored[best].second;
            if (higher || tie_lower_id) best = i;
        }
        order.push_back(scored[best].second);
        scored.erase(scored.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return order;
}

Outcome priority_oracle() {
    Checker c;
    std::size_t compared = 0, max_items = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t n = 1 + rng() % 100;
        max_items = std::max(max_items, n);
        const std::size_t pages = 1 + rng() % 5;
        const auto doc = generated_catalog(n, pages);

        TranslationCenter center(two_languages(), system_clock());
        center.import_catalog(doc);
        std::vector<std::string> requesters, reviewers;
        for (int i = 0; i < 10; ++i) requesters.push_back(center.register_member(fmt::format("req{}", i), {}).member.member_id);
        for (int i = 0; i < 5; ++i) reviewers.push_back(center.register_member(fmt::format("rev{}", i), {}).member.member_id);
        const auto author = center.register_member("author", {}).member.member_id;

        std::map<std::string, OracleItem> model;
        for (const auto& page : doc.pages) {
            for (const auto& seg : page.segments) model[seg.id].id = seg.id;
        }
        // Views: 0-1000, with a few forced ties.
        for (auto& [id, m] : model) {
            m.views = (rng() % 4 == 0) ? 7 : rng() % 1001;
            for (std::uint64_t v = 0; v < m.views; ++v) center.record_view(id);
        }
        // Item requests, then some page requests fanned out over the page.
        for (auto& [id, m] : model) {
            const std::size_t k = rng() % 11;
            for (std::size_t r = 0; r < k; ++r) {
                center.request_translation({RequestTarget::Kind::item, id}, "es", requesters[r]);
                m.requesters.insert(requesters[r]);
            }
        }
        for (int pr = 0; pr < 3; ++pr) {
            const auto& page = doc.pages[rng() % doc.pages.size()];
            const auto& who = requesters[rng() % requesters.size()];
            center.request_translation({RequestTarget::Kind::page, page.page_id}, "es", who);
            for (const auto& seg : page.segments) model[seg.id].requesters.insert(who);
        }
        // Translations, reviews and edits; French activity is noise for the Spanish queue.
        for (auto& [id, m] : model) {
            if (rng() % 5 < 3) {
                auto t = center.submit_translation(id, "es", "es " + id, author, std::nullopt);
                m.translated = true;
                const std::size_t reviews = rng() % 5;
                for (std::size_t r = 0; r < reviews; ++r) {
                    const auto rubric = random_rubric(rng);
                    center.submit_review(t.translation_id, reviewers[r], rubric, std::nullopt);
                    m.review_totals.push_back(rubric_total(rubric));
                }
                if (rng() % 6 == 0) {
                    t = center.submit_translation(id, "es", "es2 " + id, author, t.version);
                    m.review_totals.clear();
                }
            }
            if (rng() % 3 == 0) center.submit_translation(id, "fr", "fr " + id, author, std::nullopt);
        }

        std::vector<OracleItem> all;
        for (const auto& [id, m] : model) all.push_back(m);
        const auto expected = oracle_ranking(all);
        std::vector<std::string> actual;
        for (const auto& l : center.list_items("es", ItemFilter::all, ItemOrder::priority)) actual.push_back(l.item.id);
        c.expect(actual == expected, fmt::format("seed {}: ranked queue differs from oracle", seed));

        std::vector<OracleItem> untranslated;
        for (const auto& m : all) if (!m.translated) untranslated.push_back(m);
        std::vector<std::string> actual_un;
        for (const auto& l : center.list_items("es", ItemFilter::untranslated, ItemOrder::priority)) actual_un.push_back(l.item.id);
        c.expect(actual_un == oracle_ranking(untranslated), fmt::format("seed {}: untranslated queue differs", seed));
        ++compared;
    }
    return c.outcome(fmt::format("{} catalogs (up to {} items) sequence-identical", compared, max_items));
}

Outcome contention() {
    Checker c;
    TranslationCenter center(two_languages(), system_clock());
    center.import_catalog(generated_catalog(1, 1));
    ScratchDir docs("docs");
    ApiServer api(center, docs.path());
    const int port = api.bind("127.0.0.1", 0);
    std::thread server([&] { api.listen(); });

    std::vector<std::string> tokens;
    {
        Api setup(port);
        for (int i = 0; i < 100; ++i) {
            Reply r;
            for (int attempt = 0; attempt < 100 && r.status == -1; ++attempt) {
                r = setup.post("/api/members", {{"display_name", fmt::format("writer{}", i)}});
                if (r.status == -1) std::this_thread::sleep_for(std::chrono::milliseconds(5));
            }
            tokens.push_back(r.body.at("session").at("token"));
        }
    }

    const int attempts = 100;
    std::atomic<int> successes{0}, conflicts{0}, other{0};
    std::barrier start(attempts);
    std::vector<std::thread> writers;
    for (int i = 0; i < attempts; ++i) {
        writers.emplace_back([&, i] {
            Api client(port);
            std::mt19937 rng(static_cast<unsigned>(i));
            start.arrive_and_wait();
            std::this_thread::sleep_for(std::chrono::microseconds(rng() % 50000));
            const auto cur = client.get("/api/items/i000/translations?lang=es");
            if (cur.status != 200) {
                std::cerr << "read failed: " << cur.status << " " << cur.body.dump() << "\n";
                ++other;
                return;
            }
            json body{{"lang", "es"}, {"text", fmt::format("texto {}", i)}};
            if (!cur.body.at("current").is_null()) body["base_version"] = cur.body["current"]["version"];
            const auto r = client.post("/api/items/i000/translations", body, tokens[static_cast<std::size_t>(i)]);
            if (r.status == 201) {
                ++successes;
            } else if (r.status == 409 && r.body["error"]["code"] == "conflict") {
                ++conflicts;
            } else {
                ++other;
            }
        });
    }
    for (auto& t : writers) t.join();
    api.stop();
    server.join();

    const auto history = center.translation_history("i000", "es");
    const auto current = std::count_if(history.begin(), history.end(),
                                       [](const Translation& t) { return t.status == TranslationStatus::current; });
    c.expect(current == 1, fmt::format("{} current translations", current));
    bool dense = history.size() == static_cast<std::size_t>(successes.load());
    for (std::size_t i = 0; i < history.size(); ++i) dense = dense && history[i].version == i + 1;
    c.expect(dense, "versions are not dense 1..successes");
    c.expect(history.empty() || history.back().status == TranslationStatus::current, "latest version is not current");
    c.expect(successes + conflicts == attempts, fmt::format("{} + {} != {} ({} other)", successes.load(), conflicts.load(), attempts, other.load()));
    c.expect(center.verify_invariants().empty(), "invariant violations");
    return c.outcome(fmt::format("{} successes + {} conflicts = {} attempts, one current, versions 1..{}",
                                 successes.load(), conflicts.load(), attempts, history.size()));
}

std::string percent_oracle(std::uint64_t m, std::uint64_t n) {
    if (n == 0) return "0.0";
    std::uint64_t tenths = 1000 * m / n;
    if (2 * (1000 * m % n) >= n) ++tenths;
    return fmt::format("{}.{}", tenths / 10, tenths % 10);
}

Outcome progress_meter() {
    Checker c;
    std::mt19937_64 rng(2024);
    std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 0}, {4, 3}, {3, 1}, {16, 1}, {8, 1}};
    while (pairs.size() < 50) {
        const std::size_t n = 1 + rng() % 400;
        pairs.emplace_back(n, rng() % (n + 1));
    }
    for (const auto& [n, m] : pairs) {
        TranslationCenter center(two_languages(), system_clock());
        if (n > 0) center.import_catalog(generated_catalog(n, 1 + n % 3));
        const auto author = center.register_member("t", {}).member.member_id;
        const auto items = center.list_items("es", ItemFilter::all, ItemOrder::id);
        for (std::size_t i = 0; i < m; ++i) center.submit_translation(items[i].item.id, "es", "x", author, std::nullopt);
        const auto p = center.progress("es");
        c.expect(p.total_count == n && p.translated_count == m, fmt::format("N={} M={}: counts {}/{}", n, m, p.translated_count, p.total_count));
        c.expect(p.percent == percent_oracle(m, n), fmt::format("N={} M={}: '{}' != '{}'", n, m, p.percent, percent_oracle(m, n)));
    }
    return c.outcome(fmt::format("{} (N, M) pairs including N=0, 3/4=75.0, 1/3=33.3, 1/16=6.3", pairs.size()));
}

Outcome export_round_trip() {
    Checker c;
    ScratchDir dir("roundtrip");
    const auto doc = generated_catalog(200, 7);
    write_file(dir / "catalog.json", to_json(doc).dump(2));
    fs::create_directories(dir.path() / "b");
    write_file(dir / "b/tcenter.json", config_json());
    const std::string log = dir / "stderr.log";

    // Populate instance A in memory, with multiple versions and gaps, and export it over the API.
    std::map<std::string, std::string> api_export;
    {
        TranslationCenter center(two_languages(), system_clock());
        center.import_catalog(doc);
        const auto t1 = center.register_member("t1", {}).member.member_id;
        const auto t2 = center.register_member("t2", {}).member.member_id;
        std::mt19937_64 rng(77);
        for (const auto& page : doc.pages) {
            for (const auto& seg : page.segments) {
                for (const char* lang : {"es", "fr"}) {
                    if (rng() % 4 == 0) continue;
                    auto t = center.submit_translation(seg.id, lang, fmt::format("{} «{}» ñ", lang, seg.id), t1, std::nullopt);
                    for (std::uint64_t e = rng() % 3; e > 0; --e) {
                        t = center.submit_translation(seg.id, lang, fmt::format("{} edit {} of {}", lang, t.version, seg.id), t2, t.version);
                    }
                }
            }
        }
        const auto admin = center.register_member("admin", {});
        ApiServer api(center, dir.path());
        const int port = api.bind("127.0.0.1", 0);
        std::thread server([&] { api.listen(); });
        Api client(port);
        for (const char* lang : {"es", "fr"}) {
            httplib::Result res;
            for (int attempt = 0; attempt < 100 && !res; ++attempt) {
                res = client.raw_get(std::string("/api/export/") + lang, admin.session.token);
                if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(5));
            }
            c.expect(res && res->status == 200, "API export failed");
            if (res) api_export[lang] = res->body;
        }
        api.stop();
        server.join();
    }

    // Fresh instance B: import A's exports with the CLI and export them again.
    auto cli = [&](std::vector<std::string> args) {
        args.insert(args.begin(), TCENTER_CLI);
        return acceptance::run(args, log);
    };
    std::size_t bytes = 0;
    c.expect(cli({"import", "--file", dir / "catalog.json", "--config", dir / "b/tcenter.json"}).first == 0, "catalog import into B failed");
    for (const std::string lang : {"es", "fr"}) {
        const auto first = dir / ("a_" + lang + ".json");
        const auto second = dir / ("b_" + lang + ".json");
        write_file(first, api_export[lang]);
        c.expect(cli({"import", "--file", first, "--config", dir / "b/tcenter.json"}).first == 0, "import into B failed");
        c.expect(cli({"export", "--lang", lang, "--out", second, "--config", dir / "b/tcenter.json"}).first == 0, "export from B failed");
        const auto a = api_export[lang], b = read_file(second);
        c.expect(!a.empty() && a == b, lang + ": API export -> CLI import -> CLI export is not byte-identical");
        bytes += a.size();
    }
    return c.outcome(fmt::format("200 items x 2 languages, {} bytes identical (CLI and API)", bytes));
}

Outcome poll_integrity() {
    Checker c;
    std::mt19937_64 rng(99);
    std::size_t steps_total = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        TranslationCenter center(two_languages(), system_clock());
        std::vector<std::string> members;
        const std::size_t voters = 1 + rng() % 12;
        for (std::size_t i = 0; i < voters; ++i) members.push_back(center.register_member(fmt::format("v{}", i), {}).member.member_id);
        const std::size_t options = 2 + rng() % 5;
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < options; ++i) labels.push_back(fmt::format("option {}", i));
        const auto poll = center.create_poll("Which term?", labels, std::nullopt, members[0]);

        std::map<std::string, std::size_t> replay;
        bool closed = false;
        const std::size_t steps = rng() % 60;
        for (std::size_t s = 0; s < steps; ++s) {
            ++steps_total;
            if (!closed && rng() % 50 == 0) {
                center.close_poll(poll.poll_id);
                closed = true;
                continue;
            }
            const auto& who = members[rng() % members.size()];
            const std::size_t choice = rng() % (options + 1); // == options is out of range
            try {
                center.poll_vote(poll.poll_id, who, choice);
                c.expect(!closed && choice < options, fmt::format("trial {}: invalid vote accepted", trial));
                replay[who] = choice;
            } catch (const Error& e) {
                const auto want = closed ? ErrorCode::state : ErrorCode::validation;
                c.expect((closed || choice >= options) && e.code() == want, fmt::format("trial {}: unexpected rejection", trial));
            }
        }
        std::vector<std::size_t> expected(options, 0);
        for (const auto& [who, choice] : replay) ++expected[choice];
        const auto tally = center.poll(poll.poll_id).tally();
        std::size_t total = 0;
        for (auto t : tally) total += t;
        c.expect(tally == expected, fmt::format("trial {}: per-option counts differ from replay", trial));
        c.expect(total == replay.size(), fmt::format("trial {}: total {} != distinct voters {}", trial, total, replay.size()));
    }
    return c.outcome(fmt::format("1000 sequences, {} operations, tallies match replay", steps_total));
}

// ---------------------------------------------------------------------------
// Crash consistency

struct AckedTranslation {
    std::string tid, item, lang, text;
    std::uint32_t version;
};

struct CrashModel {
    struct MemberRef {
        std::string id, name, token;
    };
    std::vector<MemberRef> members;
    std::vector<AckedTranslation> translations;
    std::map<std::pair<std::string, std::string>, std::uint32_t> current; // (item, lang) -> version
    std::map<std::pair<std::string, std::string>, std::string> author;   // (item, lang) -> member of latest
    std::vector<std::pair<std::string, std::string>> reviews;            // (tid, review id)
    std::vector<std::tuple<std::string, std::string, std::string>> comments; // item, lang, comment id
    std::map<std::string, std::size_t> poll_options;
    std::map<std::string, std::map<std::string, std::size_t>> votes;     // poll -> member -> option
    std::optional<std::tuple<std::string, std::string, std::size_t>> last_vote; // sent, maybe unanswered
    std::map<std::string, std::uint64_t> views;
    std::vector<std::tuple<std::string, std::string, std::string>> requests; // member, item, lang
    std::vector<std::pair<std::string, std::string>> forum_posts;        // thread, post
    std::vector<std::pair<std::string, std::string>> glossary;           // term, variant text
    std::mutex mutex; // the in-flight call applies its result from another thread
};

const std::vector<std::string> kCrashItems{"home.welcome", "home.intro", "search.go"};

// One scripted call; applies its effect to the model only when acknowledged.
std::function<void(Api&)> next_call(std::mt19937_64& rng, CrashModel& model, int step) {
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    if (model.members.size() < 3 || rng() % 15 == 0) {
        const std::string name = fmt::format("member{}", step);
        return [&model, name](Api& api) {
            const auto r = api.post("/api/members", {{"display_name", name}, {"languages", {"es"}}});
            if (r.status != 201) return;
            std::lock_guard lock(model.mutex);
            model.members.push_back({r.body["member"]["member_id"], name, r.body["session"]["token"]});
        };
    }
    const auto member = model.members[pick(model.members.size())];
    const std::string item = kCrashItems[pick(kCrashItems.size())];
    const std::string lang = rng() % 3 == 0 ? "fr" : "es";
    switch (rng() % 9) {
    case 0:
    case 1: {
        json body{{"lang", lang}, {"text", fmt::format("{} {} paso {}", lang, item, step)}};
        if (const auto it = model.current.find({item, lang}); it != model.current.end()) body["base_version"] = it->second;
        return [&model, member, item, lang, body](Api& api) {
            const auto r = api.post("/api/items/" + item + "/translations", body, member.token);
            if (r.status != 201) return;
            std::lock_guard lock(model.mutex);
            const auto v = r.body["version"].get<std::uint32_t>();
            model.translations.push_back({r.body["translation_id"], item, lang, r.body["text"], v});
            model.current[{item, lang}] = v;
            model.author[{item, lang}] = member.id;
        };
    }
    case 2: {
        if (model.translations.empty()) break;
        const auto t = model.translations[pick(model.translations.size())];
        RubricScores rubric = random_rubric(rng);
        return [&model, member, t, rubric](Api& api) {
            const auto r = api.post("/api/translations/" + t.tid + "/reviews", {{"rubric", rubric}}, member.token);
            if (r.status != 201) return;
            std::lock_guard lock(model.mutex);
            model.reviews.emplace_back(t.tid, r.body["review_id"]);
        };
    }
    case 3:
        return [&model, member, item, lang, step](Api& api) {
            const auto r = api.post("/api/items/" + item + "/comments",
                                    {{"lang", lang}, {"body", fmt::format("nota {}", step)}}, member.token);
            if (r.status != 201) return;
            std::lock_guard lock(model.mutex);
            model.comments.emplace_back(item, lang, r.body["comment_id"]);
        };
    case 4: {
        const bool page = rng() % 2;
        return [&model, member, item, lang, page](Api& api) {
            json body{{"lang", lang}};
            if (page) {
                body["page_id"] = item.substr(0, item.find('.'));
            } else {
                body["item_id"] = item;
            }
            const auto r = api.post("/api/requests", body, member.token);
            if (r.status != 200) return;
            std::lock_guard lock(model.mutex);
            for (const auto& c : r.body["counts"]) model.requests.emplace_back(member.id, c["item_id"], lang);
        };
    }
    case 5: {
        if (model.poll_options.empty() || rng() % 4 == 0) {
            return [&model, member, step](Api& api) {
                const auto r = api.post("/api/polls", {{"question", fmt::format("q{}", step)}, {"options", {"a", "b", "c"}}},
                                        member.token);
                if (r.status != 201) return;
                std::lock_guard lock(model.mutex);
                model.poll_options[r.body["poll_id"]] = 3;
            };
        }
        auto it = model.poll_options.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(pick(model.poll_options.size())));
        const std::string poll = it->first;
        const std::size_t option = pick(3);
        return [&model, member, poll, option](Api& api) {
            {
                std::lock_guard lock(model.mutex);
                model.last_vote.emplace(poll, member.id, option);
            }
            const auto r = api.post("/api/polls/" + poll + "/votes", {{"option", option}}, member.token);
            if (r.status != 200) return;
            std::lock_guard lock(model.mutex);
            model.votes[poll][member.id] = option;
        };
    }
    case 6:
        return [&model, member, item](Api& api) {
            const auto r = api.post("/api/items/" + item + "/view", json::object(), member.token);
            if (r.status != 200) return;
            std::lock_guard lock(model.mutex);
            ++model.views[item];
        };
    case 7: {
        const std::string text = rng() % 2 ? "ordenador" : "computadora";
        return [&model, member, text](Api& api) {
            const auto r = api.post("/api/glossary", {{"term", "computer"}, {"lang", "es"}, {"text", text}}, member.token);
            if (r.status != 200) return;
            std::lock_guard lock(model.mutex);
            model.glossary.emplace_back("computer", text);
        };
    }
    default:
        return [&model, member, step](Api& api) {
            const auto r = api.post("/api/forums", {{"kind", "general"}, {"title", fmt::format("t{}", step)}, {"body", "hola"}},
                                    member.token);
            if (r.status != 201) return;
            std::lock_guard lock(model.mutex);
            model.forum_posts.emplace_back(r.body["thread"]["thread_id"], r.body["post"]["post_id"]);
        };
    }
    return [](Api&) {};
}

// Checks the restarted service against the acknowledged writes.
void verify_restart(Checker& c, int session, Api& api, CrashModel& model, const fs::path& data,
                    bool in_flight_view) {
    const std::string tag = fmt::format("session {}", session);
    if (const auto text = read_file(data / "state.json"); !text.empty()) {
        const auto state = json::parse(text);
        const auto problems = verify_state(state);
        c.expect(problems.empty(), tag + ": " + (problems.empty() ? "" : problems.front()));
        // Each acknowledged vote is the member's recorded choice, unless a later
        // vote by the same member was in flight at the kill.
        for (const auto& poll : state["polls"]["polls"]) {
            const auto& recorded = poll["votes"];
            for (const auto& [member, option] : model.votes[poll["poll_id"].get<std::string>()]) {
                const bool same = recorded.contains(member) && recorded[member] == option;
                const bool superseded = model.last_vote && std::get<0>(*model.last_vote) == poll["poll_id"] &&
                                        std::get<1>(*model.last_vote) == member &&
                                        recorded.contains(member) && recorded[member] == std::get<2>(*model.last_vote);
                c.expect(same || superseded, tag + ": acknowledged vote of " + member + " lost");
            }
        }
    } else {
        c.expect(model.members.empty(), tag + ": acknowledged writes but no state file");
    }
    for (const auto& t : model.translations) {
        const auto r = api.get("/api/items/" + t.item + "/translations?lang=" + t.lang);
        bool found = false;
        for (const auto& h : r.body["history"]) {
            found = found || (h["translation_id"] == t.tid && h["version"] == t.version && h["text"] == t.text);
        }
        c.expect(found, tag + ": acknowledged translation " + t.tid + " lost");
    }
    for (const auto& item : kCrashItems) {
        for (const char* lang : {"es", "fr"}) {
            const auto r = api.get("/api/items/" + item + "/translations?lang=" + lang);
            int current = 0;
            std::uint32_t expect_version = 1;
            bool dense = true;
            for (const auto& h : r.body["history"]) {
                current += h["status"] == "current";
                dense = dense && h["version"] == expect_version++;
            }
            c.expect(current <= 1 && dense, tag + ": version chain broken for " + item);
        }
    }
    for (const auto& [tid, rid] : model.reviews) {
        const auto r = api.get("/api/translations/" + tid + "/reviews");
        bool found = false;
        for (const auto& rv : r.body) found = found || rv["review_id"] == rid;
        c.expect(found, tag + ": acknowledged review lost");
    }
    for (const auto& [item, lang, cid] : model.comments) {
        const auto r = api.get("/api/items/" + item + "/comments?lang=" + lang);
        bool found = false;
        for (const auto& cm : r.body) found = found || cm["comment_id"] == cid;
        c.expect(found, tag + ": acknowledged comment lost");
    }
    for (const auto& [poll, opts] : model.poll_options) {
        const auto r = api.get("/api/polls/" + poll);
        c.expect(r.status == 200, tag + ": acknowledged poll lost");
        std::size_t total = 0;
        for (const auto& n : r.body["tally"]) total += n.get<std::size_t>();
        c.expect(total == r.body["voters"].get<std::size_t>(), tag + ": tally total != voters");
        c.expect(total >= model.votes[poll].size(), tag + ": acknowledged votes lost");
    }
    for (const auto& [item, n] : model.views) {
        const auto r = api.get("/api/items/" + item);
        const auto v = r.body["item"]["view_count"].get<std::uint64_t>();
        c.expect(v >= n && v <= n + (in_flight_view ? 1 : 0), tag + ": view count drifted");
    }
    for (const auto& [who, item, lang] : model.requests) {
        const auto r = api.get("/api/items?lang=" + lang + "&order=id");
        bool requested = false;
        for (const auto& l : r.body) requested = requested || (l["item"]["id"] == item && l["request_count"] >= 1);
        c.expect(requested, tag + ": acknowledged request lost");
    }
    for (const auto& [thread, post] : model.forum_posts) {
        const auto r = api.get("/api/forums/" + thread + "/posts");
        c.expect(r.status == 200 && !r.body["posts"].empty() && r.body["posts"][0]["post_id"] == post,
                 tag + ": acknowledged forum post lost");
    }
    if (!model.glossary.empty()) {
        const auto r = api.get("/api/glossary?term=computer");
        std::set<std::string> stored;
        if (r.status == 200) {
            for (const auto& v : r.body["translations"]["es"]) stored.insert(v["text"].get<std::string>());
        }
        for (const auto& [term, text] : model.glossary) {
            c.expect(stored.contains(text), tag + ": acknowledged glossary variant lost");
        }
    }
    for (const auto& m : model.members) {
        c.expect(api.get("/api/binder", m.token).status == 200, tag + ": session of " + m.name + " lost");
    }
}

Outcome crash_consistency() {
    Checker c;
    std::size_t calls = 0, in_flight = 0;
    for (int session = 0; session < 50; ++session) {
        ScratchDir dir("crash");
        write_file(dir / "tcenter.json", config_json());
        const std::string log = dir / "server.log";
        const auto imported = acceptance::run({TCENTER_CLI, "import", "--file", TCENTER_FIXTURES "/catalog.json",
                                               "--config", dir / "tcenter.json"}, log);
        c.expect(imported.first == 0, "fixture import failed");

        std::mt19937_64 rng(static_cast<std::uint64_t>(session) * 7919 + 1);
        CrashModel model;
        const int script = 20 + static_cast<int>(rng() % 30);
        const int kill_at = static_cast<int>(rng() % static_cast<std::uint64_t>(script + 1));
        bool view_in_flight = false;
        {
            Server server(dir / "tcenter.json", log);
            Api api(server.port());
            for (int step = 0; step < kill_at; ++step) {
                next_call(rng, model, step)(api);
                ++calls;
            }
            if (kill_at < script && rng() % 2) {
                // Kill while a call is being processed.
                auto call = next_call(rng, model, kill_at);
                std::thread flight([&] {
                    Api own(server.port());
                    call(own);
                });
                std::this_thread::sleep_for(std::chrono::microseconds(rng() % 3000));
                server.process().kill(SIGKILL);
                flight.join();
                view_in_flight = true; // a view may have been counted without an answer
                ++in_flight;
            } else {
                server.process().kill(SIGKILL);
            }
            server.process().wait();
        }
        try {
            Server restarted(dir / "tcenter.json", log);
            Api api(restarted.port());
            verify_restart(c, session, api, model, dir.path() / "data", view_in_flight);
            c.expect(restarted.shutdown(), fmt::format("session {}: graceful shutdown failed", session));
            const auto final_state = read_file(dir.path() / "data" / "state.json");
            c.expect(!final_state.empty() && verify_state(json::parse(final_state)).empty(),
                     fmt::format("session {}: state after shutdown violates invariants", session));
        } catch (const std::exception& e) {
            c.expect(false, fmt::format("session {}: restart failed: {}", session, e.what()));
        }
    }
    return c.outcome(fmt::format("50 sessions, {} acknowledged-path calls, {} kills mid-request, invariants hold after restart",
                                 calls, in_flight));
}

// ---------------------------------------------------------------------------
// End to end through the CLI and the HTTP API only

Outcome end_to_end() {
    Checker c;
    ScratchDir dir("e2e");
    write_file(dir / "tcenter.json", config_json());
    const std::string log = dir / "server.log";
    const std::string cfg = dir / "tcenter.json";

    const auto imported = acceptance::run({TCENTER_CLI, "import", "--file", TCENTER_FIXTURES "/catalog.json", "--config", cfg}, log);
    c.expect(imported.first == 0 && imported.second == "3 added, 0 updated\n", "CLI import: '" + imported.second + "'");

    double quality = -1;
    std::size_t first_notes = 0, second_notes = 0;
    {
        Server server(cfg, log);
        Api api(server.port());
        const auto ana = api.post("/api/members", {{"display_name", "ana"}, {"languages", {"es"}}});
        const auto ben = api.post("/api/members", {{"display_name", "ben"}, {"languages", {"es"}}});
        c.expect(ana.status == 201 && ben.status == 201, "registration failed");
        const std::string ana_token = ana.body["session"]["token"], ben_token = ben.body["session"]["token"];

        const auto req = api.post("/api/requests", {{"page_id", "home"}, {"lang", "es"}}, ben_token);
        c.expect(req.status == 200 && req.body["counts"].size() == 2, "page request did not cover both items");

        std::string welcome_tid;
        for (const auto& [item, text] : std::vector<std::pair<std::string, std::string>>{
                 {"home.welcome", "Explorar colecciones"},
                 {"home.intro", "Una biblioteca digital para la enseñanza de la computación."},
                 {"search.go", "Buscar"}}) {
            const auto t = api.post("/api/items/" + item + "/translations", {{"lang", "es"}, {"text", text}}, ana_token);
            c.expect(t.status == 201 && t.body["version"] == 1, "translation of " + item + " failed");
            if (item == "home.welcome") welcome_tid = t.body["translation_id"];
        }

        const auto review = api.post("/api/translations/" + welcome_tid + "/reviews",
                                     {{"rubric", kPerfect}, {"body", "Natural y claro."}}, ben_token);
        c.expect(review.status == 201 && review.body["total"] == 13, "review total is not 13");

        const auto b1 = api.get("/api/binder", ben_token);
        const auto b2 = api.get("/api/binder", ben_token);
        first_notes = b1.body["notifications"].size();
        second_notes = b2.body["notifications"].size();
        c.expect(first_notes == 2 && second_notes == 0,
                 fmt::format("notifications {} then {}, expected 2 then 0", first_notes, second_notes));
        const auto ana_binder = api.get("/api/binder", ana_token);
        c.expect(ana_binder.body["translated_items"].size() == 3, "author binder does not list 3 translations");

        const auto q = api.get("/api/quality/home.welcome/es");
        quality = q.body.value("quality", -1.0);
        c.expect(quality == 1.0, fmt::format("quality {} != 1.0", quality));
        c.expect(api.get("/api/progress/es").body["percent"] == "100.0", "progress is not 100.0");
        c.expect(server.shutdown(), "graceful shutdown failed");
    }
    const auto stats = acceptance::run({TCENTER_CLI, "stats", "--config", cfg}, log);
    c.expect(stats.first == 0 && stats.second == "items 3\nes 3/3 100.0%\nfr 0/3 0.0%\n", "CLI stats: '" + stats.second + "'");
    return c.outcome(fmt::format("notifications {} then {}, quality {:.1f}, stats after restart consistent",
                                 first_notes, second_notes, quality));
}

} // namespace

int main(int argc, char** argv) {
    using std::chrono::milliseconds;
    using std::chrono::seconds;
    const std::vector<Criterion> criteria{
        {"rubric-arithmetic", seconds(1), rubric_arithmetic},
        {"assessor-worksheets", seconds(1), assessor_worksheets},
        {"priority-oracle", seconds(30), priority_oracle},
        {"exactly-one-current", seconds(10), contention},
        {"progress-meter", seconds(5), progress_meter},
        {"export-round-trip", seconds(5), export_round_trip},
        {"poll-integrity", seconds(10), poll_integrity},
        {"crash-consistency", seconds(120), crash_consistency},
        {"end-to-end", seconds(10), end_to_end},
    };
    const std::set<std::string> only(argv + 1, argv + argc);

    int failed = 0;
    for (const auto& cr : criteria) {
        if (!only.empty() && !only.contains(cr.name)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = cr.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const double limit = std::chrono::duration<double>(cr.limit).count();
        if (outcome.ok && elapsed >= limit) {
            outcome = {false, fmt::format("too slow; {}", outcome.detail)};
        }
        if (!outcome.ok) ++failed;
        std::cout << fmt::format("{} {:<20} {:8.3f}s (limit {:.0f}s)  {}", outcome.ok ? "PASS" : "FAIL", cr.name,
                                 elapsed, limit, outcome.detail)
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
