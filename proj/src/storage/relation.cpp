#include "ujoin/storage/relation.hpp"

#include <cstring>
#include <stdexcept>

#include "ujoin/errors.hpp"

namespace ujoin {

namespace {

constexpr char kMagic[8] = {'U', 'R', 'E', 'L', '1', 0, 0, 0};
constexpr std::size_t kMaxName = 200;

void write_header(MutableBytes page, const RelationHeader& h) {
  std::fill(page.begin(), page.end(), std::byte{0});
  std::byte* p = page.data();
  std::memcpy(p, kMagic, sizeof(kMagic));
  store_le<std::uint32_t>(p + 8, h.page_size);
  store_le<std::uint32_t>(p + 12, h.payload_width);
  store_le<std::uint64_t>(p + 16, h.tuple_count);
  store_le<std::uint64_t>(p + 24, h.data_pages);
  store_le<std::uint64_t>(p + 32, h.checksum);
  const std::size_t len = std::min(h.name.size(), kMaxName);
  store_le<std::uint16_t>(p + 40, static_cast<std::uint16_t>(len));
  std::memcpy(p + 42, h.name.data(), len);
}

}  // namespace

RelationHeader read_relation_header(Bytes page) {
  if (page.size() < 42 + kMaxName || std::memcmp(page.data(), kMagic, sizeof(kMagic)) != 0) {
    throw StorageError("not a relation file (bad magic)", 0);
  }
  const std::byte* p = page.data();
  RelationHeader h;
  h.page_size = load_le<std::uint32_t>(p + 8);
  h.payload_width = load_le<std::uint32_t>(p + 12);
  h.tuple_count = load_le<std::uint64_t>(p + 16);
  h.data_pages = load_le<std::uint64_t>(p + 24);
  h.checksum = load_le<std::uint64_t>(p + 32);
  const auto len = load_le<std::uint16_t>(p + 40);
  if (len > kMaxName) throw StorageError("bad relation name length", 0);
  h.name.assign(reinterpret_cast<const char*>(p + 42), len);
  if (h.page_size != page.size()) {
    throw StorageError("relation page size " + std::to_string(h.page_size) +
                           " does not match the pool",
                       0);
  }
  return h;
}

RelationCursor::RelationCursor(const Relation& rel) : heap_(rel.pool(), rel.file(), 1) {}

bool RelationCursor::next() {
  if (!heap_.next()) return false;
  try {
    codec::decode_tuple(heap_.record(), tuple_);
  } catch (const StorageError& e) {
    throw StorageError(std::string("cannot decode tuple: ") + e.what(), heap_.rid().page);
  }
  return true;
}

Relation Relation::open(BufferPool& pool, const std::filesystem::path& path) {
  const FileId file = pool.open_file(path);
  try {
    if (pool.page_count(file) == 0) throw StorageError("empty relation file " + path.string());
    RelationHeader h;
    {
      PageRef page = pool.fetch(file, 0);
      h = read_relation_header(page.data());
    }
    if (h.data_pages + 1 != pool.page_count(file)) {
      throw StorageError("relation file " + path.string() + " has a truncated heap", 0);
    }
    return Relation(pool, file, path, std::move(h));
  } catch (...) {
    pool.close_file(file);
    throw;
  }
}

Relation::Relation(Relation&& other) noexcept
    : pool_(std::exchange(other.pool_, nullptr)),
      file_(other.file_),
      path_(std::move(other.path_)),
      header_(std::move(other.header_)) {}

Relation& Relation::operator=(Relation&& other) noexcept {
  if (this != &other) {
    if (pool_ != nullptr) pool_->close_file(file_);
    pool_ = std::exchange(other.pool_, nullptr);
    file_ = other.file_;
    path_ = std::move(other.path_);
    header_ = std::move(other.header_);
  }
  return *this;
}

Relation::~Relation() {
  if (pool_ != nullptr) {
    try {
      pool_->close_file(file_);
    } catch (...) {
    }
  }
}

void Relation::fetch(Rid rid, TupleBuffer& out) const {
  if (rid.page == 0 || rid.page > header_.data_pages) {
    throw StorageError("record id outside the heap", rid.page);
  }
  PageRef page = pool_->fetch(file_, rid.page);
  page_view::validate(page.data(), rid.page);
  codec::decode_tuple(page_view::record(page.data(), rid.slot), out);
}

RelationWriter::RelationWriter(BufferPool& pool, const std::filesystem::path& path,
                               std::string name)
    : pool_(&pool), path_(path), file_(pool.create_file(path)), heap_(pool, file_, 1) {
  header_.page_size = static_cast<std::uint32_t>(pool.page_size());
  header_.name = name.empty() ? path.stem().string() : std::move(name);
  header_.checksum = codec::fnv1a({});
  // Reserve the header page; its content is written by finish().
  PageRef header = pool.append_page(file_);
}

Rid RelationWriter::append(Xid xid, std::span<const Value> alts, std::string_view payload) {
  if (!xids_.insert(xid).second) {
    throw std::invalid_argument("duplicate xid " + std::to_string(xid) + " in " + header_.name);
  }
  scratch_.clear();
  codec::encode_tuple(scratch_, xid, alts, payload);
  const Rid rid = heap_.append(codec::as_bytes(scratch_));
  header_.checksum = codec::fnv1a(codec::as_bytes(scratch_), header_.checksum);
  if (first_) {
    header_.payload_width = static_cast<std::uint32_t>(payload.size());
    first_ = false;
  } else if (header_.payload_width != payload.size()) {
    header_.payload_width = kVariableWidth;
  }
  ++header_.tuple_count;
  return rid;
}

Relation RelationWriter::finish() {
  heap_.release();
  header_.data_pages = pool_->page_count(file_) - 1;
  {
    PageRef page = pool_->fetch(file_, 0);
    write_header(page.data(), header_);
    page.mark_dirty();
  }
  pool_->flush_file(file_);
  xids_.clear();
  return Relation(*pool_, file_, path_, header_);
}

}  // namespace ujoin
