#include "scgan/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "scgan/rng.hpp"
#include "scgan/serialize.hpp"

namespace scgan {

namespace fs = std::filesystem;

namespace {

uint32_t read_be32(std::istream& f, const std::string& path) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw IngestionError("truncated IDX file: " + path);
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) |
         uint32_t(b[3]);
}

struct RawIdx {
  std::vector<uint8_t> images;  // n * h * w
  std::vector<int> labels;
  int n = 0, h = 0, w = 0;
};

RawIdx load_idx_pair(const std::string& images_path, const std::string& labels_path) {
  RawIdx out;
  {
    std::ifstream f(images_path, std::ios::binary);
    if (!f) throw IngestionError("missing dataset file: " + images_path);
    if (read_be32(f, images_path) != 2051)
      throw IngestionError("corrupt IDX image file (bad magic): " + images_path);
    out.n = static_cast<int>(read_be32(f, images_path));
    out.h = static_cast<int>(read_be32(f, images_path));
    out.w = static_cast<int>(read_be32(f, images_path));
    out.images.resize(static_cast<size_t>(out.n) * out.h * out.w);
    f.read(reinterpret_cast<char*>(out.images.data()),
           static_cast<std::streamsize>(out.images.size()));
    if (!f) throw IngestionError("truncated IDX image file: " + images_path);
  }
  {
    std::ifstream f(labels_path, std::ios::binary);
    if (!f) throw IngestionError("missing dataset file: " + labels_path);
    if (read_be32(f, labels_path) != 2049)
      throw IngestionError("corrupt IDX label file (bad magic): " + labels_path);
    const int n = static_cast<int>(read_be32(f, labels_path));
    if (n != out.n)
      throw IngestionError("image/label count mismatch: " + labels_path);
    std::vector<uint8_t> raw(static_cast<size_t>(n));
    f.read(reinterpret_cast<char*>(raw.data()), n);
    if (!f) throw IngestionError("truncated IDX label file: " + labels_path);
    out.labels.assign(raw.begin(), raw.end());
  }
  return out;
}

void verify_checksums(const std::string& root,
                      const std::vector<std::string>& used_files) {
  const fs::path sidecar = fs::path(root) / "checksums.sha256";
  if (!fs::exists(sidecar)) return;
  std::map<std::string, std::string> expected;
  std::ifstream f(sidecar);
  std::string line;
  while (std::getline(f, line)) {
    std::istringstream is(line);
    std::string digest, name;
    if (is >> digest >> name) expected[name] = digest;
  }
  for (const std::string& file : used_files) {
    const std::string name = fs::path(file).filename().string();
    auto it = expected.find(name);
    if (it == expected.end()) continue;
    std::ifstream in(file, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    if (sha256_hex(content) != it->second)
      throw IngestionError("checksum mismatch for dataset file: " + file);
  }
}

Tensor to_image_tensor(const std::vector<uint8_t>& raw, std::span<const int> pick,
                       int h, int w) {
  Tensor t({static_cast<int>(pick.size()), 1, h, w});
  const size_t plane = static_cast<size_t>(h) * w;
  for (size_t i = 0; i < pick.size(); ++i) {
    const uint8_t* src = raw.data() + static_cast<size_t>(pick[i]) * plane;
    double* dst = t.ptr() + i * plane;
    for (size_t p = 0; p < plane; ++p) dst[p] = src[p] / 127.5 - 1.0;
  }
  return t;
}

Dataset load_idx_dataset(const std::string& id, const std::string& root) {
  const fs::path r(root);
  const std::string full_train_imgs = (r / "train-images-idx3-ubyte").string();
  const std::string full_train_lbls = (r / "train-labels-idx1-ubyte").string();
  const std::string full_test_imgs = (r / "t10k-images-idx3-ubyte").string();
  const std::string full_test_lbls = (r / "t10k-labels-idx1-ubyte").string();
  const std::string sub_imgs = (r / "subset-images-idx3-ubyte").string();
  const std::string sub_lbls = (r / "subset-labels-idx1-ubyte").string();

  Dataset ds;
  ds.id = id;
  ds.num_classes = 10;

  if (fs::exists(full_train_imgs)) {
    verify_checksums(root, {full_train_imgs, full_train_lbls, full_test_imgs,
                            full_test_lbls});
    RawIdx train = load_idx_pair(full_train_imgs, full_train_lbls);
    RawIdx test = load_idx_pair(full_test_imgs, full_test_lbls);
    ds.height = train.h;
    ds.width = train.w;
    std::vector<int> all_train(train.n), all_test(test.n);
    for (int i = 0; i < train.n; ++i) all_train[i] = i;
    for (int i = 0; i < test.n; ++i) all_test[i] = i;
    ds.train_images = to_image_tensor(train.images, all_train, train.h, train.w);
    ds.train_labels = train.labels;
    ds.test_images = to_image_tensor(test.images, all_test, test.h, test.w);
    ds.test_labels = test.labels;
    return ds;
  }
  if (!fs::exists(sub_imgs))
    throw IngestionError("missing dataset file: " + full_train_imgs + " (or " +
                         sub_imgs + ")");

  verify_checksums(root, {sub_imgs, sub_lbls});
  RawIdx sub = load_idx_pair(sub_imgs, sub_lbls);
  ds.height = sub.h;
  ds.width = sub.w;
  ds.from_subset = true;

  // Per-class 80/20 split preserving file order (files are class-interleaved,
  // so both splits stay balanced and any train prefix is usable as a subset).
  std::vector<int> count(10, 0), seen(10, 0);
  for (int l : sub.labels) ++count[static_cast<size_t>(l)];
  std::vector<int> train_idx, test_idx;
  for (int i = 0; i < sub.n; ++i) {
    const int l = sub.labels[static_cast<size_t>(i)];
    const int cutoff = count[static_cast<size_t>(l)] * 8 / 10;
    if (seen[static_cast<size_t>(l)]++ < cutoff)
      train_idx.push_back(i);
    else
      test_idx.push_back(i);
  }
  ds.train_images = to_image_tensor(sub.images, train_idx, sub.h, sub.w);
  ds.test_images = to_image_tensor(sub.images, test_idx, sub.h, sub.w);
  for (int i : train_idx) ds.train_labels.push_back(sub.labels[static_cast<size_t>(i)]);
  for (int i : test_idx) ds.test_labels.push_back(sub.labels[static_cast<size_t>(i)]);
  return ds;
}

Dataset load_cifar10(const std::string& root) {
  Dataset ds;
  ds.id = "cifar10";
  ds.channels = 3;
  ds.height = ds.width = 32;
  const size_t rec = 1 + 3072;
  std::vector<uint8_t> train_raw, test_raw;
  std::vector<int> train_lbl, test_lbl;
  auto load_bin = [&](const std::string& path, std::vector<uint8_t>& raw,
                      std::vector<int>& lbl) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IngestionError("missing dataset file: " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
    if (buf.size() % rec != 0)
      throw IngestionError("corrupt CIFAR10 batch (bad size): " + path);
    for (size_t off = 0; off < buf.size(); off += rec) {
      lbl.push_back(buf[off]);
      raw.insert(raw.end(), buf.begin() + off + 1, buf.begin() + off + 1 + 3072);
    }
  };
  for (int i = 1; i <= 5; ++i)
    load_bin((fs::path(root) / ("data_batch_" + std::to_string(i) + ".bin")).string(),
             train_raw, train_lbl);
  load_bin((fs::path(root) / "test_batch.bin").string(), test_raw, test_lbl);
  auto to_tensor = [&](const std::vector<uint8_t>& raw, size_t n) {
    Tensor t({static_cast<int>(n), 3, 32, 32});
    for (size_t i = 0; i < raw.size(); ++i) t[i] = raw[i] / 127.5 - 1.0;
    return t;
  };
  ds.train_images = to_tensor(train_raw, train_lbl.size());
  ds.train_labels = train_lbl;
  ds.test_images = to_tensor(test_raw, test_lbl.size());
  ds.test_labels = test_lbl;
  return ds;
}

}  // namespace

ImageBatch Dataset::train_batch(std::span<const int> indices) const {
  const int64_t plane = static_cast<int64_t>(channels) * height * width;
  Tensor t({static_cast<int>(indices.size()), channels, height, width});
  for (size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] >= 0 && indices[i] < train_size(), "train index out of range");
    std::memcpy(t.ptr() + i * plane, train_images.ptr() + indices[i] * plane,
                sizeof(double) * plane);
  }
  return ImageBatch(std::move(t), ImageRange::sym);
}

ImageBatch Dataset::test_batch(std::span<const int> indices) const {
  const int64_t plane = static_cast<int64_t>(channels) * height * width;
  Tensor t({static_cast<int>(indices.size()), channels, height, width});
  for (size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] >= 0 && indices[i] < test_size(), "test index out of range");
    std::memcpy(t.ptr() + i * plane, test_images.ptr() + indices[i] * plane,
                sizeof(double) * plane);
  }
  return ImageBatch(std::move(t), ImageRange::sym);
}

Tensor Dataset::label_rows(std::span<const int> indices, bool train) const {
  Tensor t({static_cast<int>(indices.size()), num_classes}, 0.0);
  const std::vector<int>& labels = train ? train_labels : test_labels;
  for (size_t i = 0; i < indices.size(); ++i)
    t.at(static_cast<int>(i), labels[static_cast<size_t>(indices[i])]) = 1.0;
  return t;
}

Dataset ingest_dataset(const std::string& id, const std::string& root,
                       int subset_limit) {
  Dataset ds;
  if (id == "mnist" || id == "fashion-mnist") {
    ds = load_idx_dataset(id, root);
  } else if (id == "cifar10") {
    ds = load_cifar10(root);
  } else if (id == "celeba") {
    // Expects preprocessed center-cropped grayscale 64x64 IDX files (see
    // README); CELEBA has no canonical test split, so only the subset layout
    // applies.
    ds = load_idx_dataset(id, root);
  } else if (id == "synthetic-factors") {
    ds = SyntheticFactors::as_dataset(16);
  } else {
    throw IngestionError("unknown dataset id: " + id);
  }
  if (subset_limit > 0 && subset_limit < ds.train_size()) {
    const int64_t plane = static_cast<int64_t>(ds.channels) * ds.height * ds.width;
    Tensor t({subset_limit, ds.channels, ds.height, ds.width});
    std::memcpy(t.ptr(), ds.train_images.ptr(),
                sizeof(double) * plane * subset_limit);
    ds.train_images = std::move(t);
    ds.train_labels.resize(static_cast<size_t>(subset_limit));
  }
  require(ds.train_size() >= 1, "dataset has no training images");
  return ds;
}

// ---------------------------- SyntheticFactors ------------------------------

int SyntheticFactors::cardinality(int factor) const {
  require(factor == 0 || factor == 1, "factor index out of range");
  return factor == 0 ? kShapes : kPositions;
}

Tensor SyntheticFactors::render(int shape, int position) {
  require(shape >= 0 && shape < kShapes, "shape factor out of range");
  require(position >= 0 && position < kPositions, "position factor out of range");
  Tensor img({1, kSize, kSize}, -1.0);
  const int ax = 1 + 4 * (position % 3);
  const int ay = 1 + 4 * (position / 3);
  auto set = [&](int y, int x) { img[(ay + y) * kSize + (ax + x)] = 1.0; };
  switch (shape) {
    case 0:  // filled 4x4 square, 16 px
      for (int y = 1; y <= 4; ++y)
        for (int x = 1; x <= 4; ++x) set(y, x);
      break;
    case 1:  // 6x6 border, 20 px
      for (int i = 0; i < 6; ++i) {
        set(0, i);
        set(5, i);
        if (i > 0 && i < 5) {
          set(i, 0);
          set(i, 5);
        }
      }
      break;
    case 2:  // cross with 2px arms, 12 px
      for (int y = 2; y <= 3; ++y)
        for (int x = 1; x <= 4; ++x) set(y, x);
      for (int y = 1; y <= 4; ++y)
        for (int x = 2; x <= 3; ++x)
          if (y < 2 || y > 3) set(y, x);
      break;
    case 3:  // 2x4 bar, 8 px
      for (int y = 2; y <= 3; ++y)
        for (int x = 1; x <= 4; ++x) set(y, x);
      break;
  }
  return img;
}

void SyntheticFactors::decode(const ImageView& img, int* shape, int* position) {
  require(img.height == kSize && img.width == kSize && img.channels == 1,
          "decode expects a 16x16 single-channel image");
  int count = 0;
  double cx = 0.0, cy = 0.0;
  for (int y = 0; y < kSize; ++y)
    for (int x = 0; x < kSize; ++x)
      if (img.data[y * kSize + x] > 0.0) {
        ++count;
        cx += x;
        cy += y;
      }
  require(count > 0, "decode on an empty image");
  cx /= count;
  cy /= count;
  switch (count) {
    case 16: *shape = 0; break;
    case 20: *shape = 1; break;
    case 12: *shape = 2; break;
    case 8: *shape = 3; break;
    default: throw InvalidArgument("decode: unrecognized pixel count");
  }
  const int px = static_cast<int>(std::lround((cx - 3.5) / 4.0));
  const int py = static_cast<int>(std::lround((cy - 3.5) / 4.0));
  require(px >= 0 && px < 3 && py >= 0 && py < 3, "decode: centroid off-grid");
  *position = 3 * py + px;
}

ImageBatch SyntheticFactors::sample_with_fixed(int factor, int value, int count,
                                               uint64_t seed) const {
  require(value >= 0 && value < cardinality(factor), "factor value out of range");
  Rng rng(seed);
  Tensor t({count, 1, kSize, kSize});
  for (int i = 0; i < count; ++i) {
    const int shape = factor == 0 ? value : rng.below(kShapes);
    const int pos = factor == 1 ? value : rng.below(kPositions);
    const Tensor img = render(shape, pos);
    std::memcpy(t.ptr() + static_cast<size_t>(i) * img.size(), img.ptr(),
                sizeof(double) * img.size());
  }
  return ImageBatch(std::move(t), ImageRange::sym);
}

ImageBatch SyntheticFactors::sample_random(int count, uint64_t seed) const {
  Rng rng(seed);
  Tensor t({count, 1, kSize, kSize});
  for (int i = 0; i < count; ++i) {
    const Tensor img = render(rng.below(kShapes), rng.below(kPositions));
    std::memcpy(t.ptr() + static_cast<size_t>(i) * img.size(), img.ptr(),
                sizeof(double) * img.size());
  }
  return ImageBatch(std::move(t), ImageRange::sym);
}

Dataset SyntheticFactors::as_dataset(int repeats) {
  require(repeats >= 1, "repeats must be >= 1");
  Dataset ds;
  ds.id = "synthetic-factors";
  ds.height = ds.width = kSize;
  ds.num_classes = kShapes;
  const int combos = kShapes * kPositions;
  const int n = combos * repeats;
  Tensor all({n, 1, kSize, kSize});
  std::vector<int> labels(static_cast<size_t>(n));
  int idx = 0;
  for (int r = 0; r < repeats; ++r)
    for (int s = 0; s < kShapes; ++s)
      for (int p = 0; p < kPositions; ++p) {
        const Tensor img = render(s, p);
        std::memcpy(all.ptr() + static_cast<size_t>(idx) * img.size(), img.ptr(),
                    sizeof(double) * img.size());
        labels[static_cast<size_t>(idx)] = s;
        ++idx;
      }
  // deterministic interleave so prefixes mix shapes and positions
  Rng rng(20240501);
  std::vector<int> perm(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
  rng.shuffle(perm);
  Dataset out = ds;
  out.train_images = Tensor({n, 1, kSize, kSize});
  out.train_labels.resize(static_cast<size_t>(n));
  const int64_t plane = static_cast<int64_t>(kSize) * kSize;
  for (int i = 0; i < n; ++i) {
    std::memcpy(out.train_images.ptr() + i * plane,
                all.ptr() + static_cast<int64_t>(perm[static_cast<size_t>(i)]) * plane,
                sizeof(double) * plane);
    out.train_labels[static_cast<size_t>(i)] =
        labels[static_cast<size_t>(perm[static_cast<size_t>(i)])];
  }
  // test split: one clean enumeration
  out.test_images = Tensor({combos, 1, kSize, kSize});
  out.test_labels.resize(static_cast<size_t>(combos));
  idx = 0;
  for (int s = 0; s < kShapes; ++s)
    for (int p = 0; p < kPositions; ++p) {
      const Tensor img = render(s, p);
      std::memcpy(out.test_images.ptr() + static_cast<size_t>(idx) * img.size(),
                  img.ptr(), sizeof(double) * img.size());
      out.test_labels[static_cast<size_t>(idx)] = s;
      ++idx;
    }
  return out;
}

}  // namespace scgan
