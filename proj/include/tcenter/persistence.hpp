#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace tcenter {

/// Exclusive handle on a data directory holding one state snapshot.
///
/// The directory is locked with flock(2) on DATA_DIR/LOCK for the lifetime of
/// the handle; a second open (from any process) fails with ErrorCode::state.
/// Snapshots are replaced atomically: write temp file, fsync, rename, fsync dir.
class DataDirectory {
public:
    static DataDirectory open(const std::filesystem::path& dir);

    DataDirectory(DataDirectory&& other) noexcept;
    DataDirectory& operator=(DataDirectory&& other) noexcept;
    DataDirectory(const DataDirectory&) = delete;
    DataDirectory& operator=(const DataDirectory&) = delete;
    ~DataDirectory();

    const std::filesystem::path& path() const noexcept { return dir_; }

    std::optional<std::string> read_snapshot() const;
    void write_snapshot(std::string_view bytes);

    static constexpr const char* kSnapshotName = "state.json";
    static constexpr const char* kLockName = "LOCK";

private:
    DataDirectory(std::filesystem::path dir, int lock_fd) : dir_(std::move(dir)), lock_fd_(lock_fd) {}

    std::filesystem::path dir_;
    int lock_fd_ = -1;
};

} // namespace tcenter
