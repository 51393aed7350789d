#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "tcenter/center.hpp"

namespace tcenter::testing {

// A clock the test advances by hand.
class ManualClock {
public:
    explicit ManualClock(std::int64_t start = 1'760'000'000'000)
        : now_(std::make_shared<std::atomic<std::int64_t>>(start)) {}

    Clock clock() const {
        return [now = now_] { return Timestamp{now->load()}; };
    }
    void advance(std::int64_t millis) { now_->fetch_add(millis); }
    Timestamp now() const { return Timestamp{now_->load()}; }

private:
    std::shared_ptr<std::atomic<std::int64_t>> now_;
};

inline CenterOptions test_options() {
    CenterOptions o;
    o.languages = {Language{"es", "Spanish", {"á", "é", "í", "ó", "ú", "ü", "ñ", "¿", "¡"}},
                   Language{"fr", "French", {"é", "è", "ç", "à"}}};
    o.admins = {"admin"};
    return o;
}

// Two pages, three segments.
inline CatalogDocument sample_catalog() {
    CatalogDocument doc;
    doc.pages.push_back(CatalogPage{
        "home", "/", "Home",
        {CatalogSegment{"home.welcome", "Browse Collections", Category::menu_link, "Welcome to ",
                        " today"},
         CatalogSegment{"home.intro", "A digital library.", Category::informational_text, "", ""}}});
    doc.pages.push_back(CatalogPage{
        "search", "/search", "Search",
        {CatalogSegment{"search.go", "Search", Category::button, "", ""}}});
    return doc;
}

// Items a0..a{n-1} on one page.
inline CatalogDocument numbered_catalog(std::size_t n, const std::string& prefix = "a") {
    CatalogDocument doc;
    CatalogPage page{"p", "/p", "P", {}};
    for (std::size_t i = 0; i < n; ++i) {
        page.segments.push_back(CatalogSegment{prefix + std::to_string(i),
                                               "text " + std::to_string(i), Category::other, "",
                                               ""});
    }
    doc.pages.push_back(std::move(page));
    return doc;
}

// Fresh scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("tcenter-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace tcenter::testing
