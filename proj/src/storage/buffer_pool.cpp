#include "ujoin/storage/buffer_pool.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

#include "ujoin/errors.hpp"

namespace ujoin {

namespace {

std::string errno_text() { return std::strerror(errno); }

void pread_full(int fd, std::byte* dst, std::size_t len, off_t off, PageNo page) {
  std::size_t done = 0;
  while (done < len) {
    const ssize_t n = ::pread(fd, dst + done, len - done, off + static_cast<off_t>(done));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StorageError("read failed: " + errno_text(), page);
    }
    if (n == 0) throw StorageError("short read", page);
    done += static_cast<std::size_t>(n);
  }
}

void pwrite_full(int fd, const std::byte* src, std::size_t len, off_t off, PageNo page) {
  std::size_t done = 0;
  while (done < len) {
    const ssize_t n = ::pwrite(fd, src + done, len - done, off + static_cast<off_t>(done));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StorageError("write failed: " + errno_text(), page);
    }
    done += static_cast<std::size_t>(n);
  }
}

}  // namespace

PageRef& PageRef::operator=(PageRef&& other) noexcept {
  if (this != &other) {
    release();
    pool_ = std::exchange(other.pool_, nullptr);
    frame_ = other.frame_;
    data_ = other.data_;
    size_ = other.size_;
    page_no_ = other.page_no_;
  }
  return *this;
}

void PageRef::mark_dirty() { pool_->set_dirty(frame_); }

void PageRef::release() noexcept {
  if (pool_ != nullptr) {
    pool_->unpin(frame_);
    pool_ = nullptr;
  }
}

BufferPool::BufferPool(std::size_t capacity_pages, std::size_t page_size)
    : page_size_(page_size) {
  if (page_size < kMinPageSize || page_size > kMaxPageSize) {
    throw std::invalid_argument("page size out of range: " + std::to_string(page_size));
  }
  if (capacity_pages < 4) {
    throw std::invalid_argument("buffer pool needs at least 4 frames");
  }
  arena_.resize(capacity_pages * page_size);
  frames_.resize(capacity_pages);
}

BufferPool::~BufferPool() {
  std::lock_guard lock(mu_);
  for (auto& [id, f] : files_) {
    for (std::uint32_t i = 0; i < frames_.size(); ++i) {
      if (frames_[i].valid && frames_[i].file == id && frames_[i].dirty) {
        try {
          write_back_locked(i);
        } catch (...) {
        }
      }
    }
    ::close(f.fd);
  }
}

FileId BufferPool::create_file(const std::filesystem::path& path) {
  const int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw StorageError("cannot create " + path.string() + ": " + errno_text());
  std::lock_guard lock(mu_);
  const FileId id = next_file_++;
  files_.emplace(id, OpenFile{fd, path, 0});
  return id;
}

FileId BufferPool::open_file(const std::filesystem::path& path) {
  const int fd = ::open(path.c_str(), O_RDWR);
  if (fd < 0) throw StorageError("cannot open " + path.string() + ": " + errno_text());
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    throw StorageError("cannot stat " + path.string());
  }
  if (static_cast<std::size_t>(st.st_size) % page_size_ != 0) {
    ::close(fd);
    throw StorageError(path.string() + " is not a whole number of pages");
  }
  std::lock_guard lock(mu_);
  const FileId id = next_file_++;
  files_.emplace(id, OpenFile{fd, path, static_cast<PageNo>(st.st_size / page_size_)});
  return id;
}

BufferPool::OpenFile& BufferPool::file_locked(FileId file) {
  auto it = files_.find(file);
  if (it == files_.end()) throw StorageError("unknown file id " + std::to_string(file));
  return it->second;
}

const BufferPool::OpenFile& BufferPool::file_locked(FileId file) const {
  auto it = files_.find(file);
  if (it == files_.end()) throw StorageError("unknown file id " + std::to_string(file));
  return it->second;
}

void BufferPool::forget_file_frames_locked(FileId file, bool write_back) {
  for (std::uint32_t i = 0; i < frames_.size(); ++i) {
    Frame& fr = frames_[i];
    if (!fr.valid || fr.file != file) continue;
    if (fr.pins != 0) {
      throw std::logic_error("closing a file with pinned pages");
    }
    if (write_back && fr.dirty) write_back_locked(i);
    table_.erase(key(fr.file, fr.page));
    fr = Frame{};
  }
}

void BufferPool::close_file(FileId file) {
  std::lock_guard lock(mu_);
  OpenFile& f = file_locked(file);
  forget_file_frames_locked(file, true);
  ::close(f.fd);
  files_.erase(file);
}

void BufferPool::drop_file(FileId file) {
  std::lock_guard lock(mu_);
  OpenFile& f = file_locked(file);
  forget_file_frames_locked(file, false);
  ::close(f.fd);
  std::error_code ec;
  std::filesystem::remove(f.path, ec);
  files_.erase(file);
}

PageNo BufferPool::page_count(FileId file) const {
  std::lock_guard lock(mu_);
  return file_locked(file).pages;
}

std::filesystem::path BufferPool::path(FileId file) const {
  std::lock_guard lock(mu_);
  return file_locked(file).path;
}

std::uint32_t BufferPool::victim_locked() {
  // Two full sweeps clear every reference bit; a third finding nothing means all are pinned.
  for (std::size_t step = 0; step < 3 * frames_.size(); ++step) {
    const auto i = static_cast<std::uint32_t>(hand_);
    hand_ = (hand_ + 1) % frames_.size();
    Frame& fr = frames_[i];
    if (!fr.valid) return i;
    if (fr.pins != 0) continue;
    if (fr.referenced) {
      fr.referenced = false;
      continue;
    }
    if (fr.dirty) write_back_locked(i);
    table_.erase(key(fr.file, fr.page));
    fr = Frame{};
    return i;
  }
  throw StorageError("buffer pool exhausted: every frame is pinned");
}

void BufferPool::write_back_locked(std::uint32_t frame) {
  Frame& fr = frames_[frame];
  const OpenFile& f = file_locked(fr.file);
  pwrite_full(f.fd, frame_data(frame), page_size_,
              static_cast<off_t>(std::size_t{fr.page} * page_size_), fr.page);
  fr.dirty = false;
  ++counters_.page_writes;
}

PageRef BufferPool::fetch(FileId file, PageNo page) {
  std::lock_guard lock(mu_);
  const OpenFile& f = file_locked(file);
  if (page >= f.pages) {
    throw StorageError("page beyond end of " + f.path.filename().string(), page);
  }
  if (auto it = table_.find(key(file, page)); it != table_.end()) {
    Frame& fr = frames_[it->second];
    ++fr.pins;
    fr.referenced = true;
    return PageRef(this, it->second, frame_data(it->second), page_size_, page);
  }
  const std::uint32_t i = victim_locked();
  pread_full(f.fd, frame_data(i), page_size_,
             static_cast<off_t>(std::size_t{page} * page_size_), page);
  ++counters_.page_reads;
  frames_[i] = Frame{file, page, 1, true, false, true};
  table_.emplace(key(file, page), i);
  return PageRef(this, i, frame_data(i), page_size_, page);
}

PageRef BufferPool::append_page(FileId file) {
  std::lock_guard lock(mu_);
  OpenFile& f = file_locked(file);
  const PageNo page = f.pages;
  const std::uint32_t i = victim_locked();
  std::memset(frame_data(i), 0, page_size_);
  frames_[i] = Frame{file, page, 1, true, true, true};
  table_.emplace(key(file, page), i);
  ++f.pages;
  return PageRef(this, i, frame_data(i), page_size_, page);
}

void BufferPool::flush_file(FileId file) {
  std::lock_guard lock(mu_);
  file_locked(file);
  for (std::uint32_t i = 0; i < frames_.size(); ++i) {
    if (frames_[i].valid && frames_[i].file == file && frames_[i].dirty) write_back_locked(i);
  }
}

void BufferPool::flush_all() {
  std::lock_guard lock(mu_);
  for (std::uint32_t i = 0; i < frames_.size(); ++i) {
    if (frames_[i].valid && frames_[i].dirty) write_back_locked(i);
  }
}

void BufferPool::evict_all() {
  std::lock_guard lock(mu_);
  for (std::uint32_t i = 0; i < frames_.size(); ++i) {
    Frame& fr = frames_[i];
    if (!fr.valid) continue;
    if (fr.dirty) write_back_locked(i);
    if (fr.pins == 0) {
      table_.erase(key(fr.file, fr.page));
      fr = Frame{};
    }
  }
}

IoCounters BufferPool::counters() const {
  std::lock_guard lock(mu_);
  return counters_;
}

void BufferPool::reset_counters() {
  std::lock_guard lock(mu_);
  counters_ = {};
}

std::size_t BufferPool::pinned_frames() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const Frame& fr : frames_) n += (fr.valid && fr.pins != 0) ? 1 : 0;
  return n;
}

void BufferPool::unpin(std::uint32_t frame) noexcept {
  std::lock_guard lock(mu_);
  Frame& fr = frames_[frame];
  if (fr.pins > 0) --fr.pins;
}

void BufferPool::set_dirty(std::uint32_t frame) {
  std::lock_guard lock(mu_);
  frames_[frame].dirty = true;
}

}  // namespace ujoin
