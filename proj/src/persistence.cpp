#include "tcenter/persistence.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fmt/core.h>

#include "tcenter/error.hpp"

namespace tcenter {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void io_fail(const std::string& what, const fs::path& p) {
    fail(ErrorCode::io, fmt::format("{} '{}': {}", what, p.string(), std::strerror(errno)),
         {{"path", p.string()}});
}

void write_all(int fd, std::string_view bytes, const fs::path& p) {
    while (!bytes.empty()) {
        const ssize_t n = ::write(fd, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            io_fail("cannot write", p);
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
}

} // namespace

DataDirectory DataDirectory::open(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        fail(ErrorCode::io, fmt::format("cannot create data directory '{}': {}", dir.string(),
                                        ec.message()));
    }
    const fs::path lock_path = dir / kLockName;
    const int fd = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) io_fail("cannot open lock file", lock_path);
    if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
        const int err = errno;
        ::close(fd);
        if (err == EWOULDBLOCK) {
            fail(ErrorCode::state,
                 fmt::format("data directory '{}' is in use by another process", dir.string()),
                 {{"path", dir.string()}});
        }
        errno = err;
        io_fail("cannot lock", lock_path);
    }
    return DataDirectory(dir, fd);
}

DataDirectory::DataDirectory(DataDirectory&& other) noexcept
    : dir_(std::move(other.dir_)), lock_fd_(other.lock_fd_) {
    other.lock_fd_ = -1;
}

DataDirectory& DataDirectory::operator=(DataDirectory&& other) noexcept {
    if (this != &other) {
        if (lock_fd_ >= 0) ::close(lock_fd_);
        dir_ = std::move(other.dir_);
        lock_fd_ = other.lock_fd_;
        other.lock_fd_ = -1;
    }
    return *this;
}

DataDirectory::~DataDirectory() {
    if (lock_fd_ >= 0) ::close(lock_fd_); // releases the flock
}

std::optional<std::string> DataDirectory::read_snapshot() const {
    const fs::path p = dir_ / kSnapshotName;
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        if (!fs::exists(p)) return std::nullopt;
        io_fail("cannot read", p);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

void DataDirectory::write_snapshot(std::string_view bytes) {
    const fs::path final_path = dir_ / kSnapshotName;
    const fs::path tmp_path = dir_ / (std::string(kSnapshotName) + ".tmp");
    const int fd = ::open(tmp_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_fail("cannot create", tmp_path);
    try {
        write_all(fd, bytes, tmp_path);
        if (::fsync(fd) != 0) io_fail("cannot sync", tmp_path);
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    if (::rename(tmp_path.c_str(), final_path.c_str()) != 0) io_fail("cannot rename", tmp_path);
    const int dfd = ::open(dir_.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (dfd >= 0) {
        ::fsync(dfd);
        ::close(dfd);
    }
}

} // namespace tcenter
