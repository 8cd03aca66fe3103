#include "ghostdet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <system_error>

#include "ghostdet/error.hpp"
#include "ghostdet/parallel.hpp"
#include "ghostdet/pnm.hpp"
#include "ghostdet/random.hpp"

namespace ghostdet {

namespace {

constexpr std::string_view kManifestHeader =
    "path,n_segments,k,intensity,tx,ty,split,corruption,blur_sigma,seed";
constexpr std::string_view kManifestMagic = "# ghostdet manifest v1";
// Stream index reserved for the split shuffle; sample streams use 0..n-1.
constexpr std::uint64_t kSplitStream = ~std::uint64_t{0};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

GrayImage ground_image(const DatasetSpec& spec, std::size_t index, std::uint64_t field_seed, double alpha) {
  if (spec.source_images.empty()) {
    return synth_ground_image(spec.image_size, alpha, field_seed);
  }
  const auto& src = spec.source_images[index % spec.source_images.size()];
  const GrayImage img = pnm::read_gray(src);
  if (img.width() < spec.image_size || img.height() < spec.image_size) {
    throw ArgumentError("source image " + src.string() + " is smaller than " +
                        std::to_string(spec.image_size) + " pixels");
  }
  return crop(img, (img.width() - spec.image_size) / 2, (img.height() - spec.image_size) / 2,
              spec.image_size, spec.image_size);
}

void validate(const DatasetSpec& spec) {
  const double total = spec.train_fraction + spec.val_fraction + spec.test_fraction;
  if (spec.train_fraction <= 0.0 || spec.val_fraction < 0.0 || spec.test_fraction < 0.0 ||
      std::abs(total - 1.0) > 1e-9) {
    throw ArgumentError("split fractions must be non-negative, give train a share, and sum to 1");
  }
  if (!(spec.spectral_exponent >= 0.0) || !(spec.spectral_exponent_spread >= 0.0) ||
      !std::isfinite(spec.spectral_exponent + spec.spectral_exponent_spread)) {
    throw ArgumentError("spectral exponent and its spread must be finite and non-negative");
  }
  if (spec.mirror.n_segments < 2) throw ArgumentError("mirror needs at least 2 segments");
  if (spec.image_size <= static_cast<std::size_t>(kMaxOffset) || spec.image_size < 16) {
    throw ArgumentError("image size must be at least 16 pixels");
  }
  if (spec.corruption == Corruption::blur) {
    if (spec.blur_sigmas.empty()) throw ArgumentError("blur corpus needs at least one sigma");
    for (double s : spec.blur_sigmas) {
      if (!(s > 0.0)) throw ArgumentError("blur sigmas must be positive");
    }
  }
  const auto classes = class_count(spec);
  if (spec.n_images < classes) {
    throw ArgumentError("cannot balance " + std::to_string(classes) + " classes over " +
                        std::to_string(spec.n_images) + " images");
  }
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::string_view to_string(Corruption corruption) {
  switch (corruption) {
    case Corruption::none: return "none";
    case Corruption::ghost: return "ghost";
    case Corruption::blur: return "blur";
  }
  return "none";
}

std::string_view to_string(LabelTask task) {
  return task == LabelTask::binary ? "binary" : "intensity";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw ArgumentError("unknown split '" + std::string(text) + "'");
}

Corruption parse_corruption(std::string_view text) {
  if (text == "none") return Corruption::none;
  if (text == "ghost") return Corruption::ghost;
  if (text == "blur") return Corruption::blur;
  throw ArgumentError("unknown corruption '" + std::string(text) + "'");
}

LabelTask parse_task(std::string_view text) {
  if (text == "binary") return LabelTask::binary;
  if (text == "intensity") return LabelTask::intensity;
  throw ArgumentError("unknown task '" + std::string(text) + "'");
}

std::size_t class_count(const DatasetSpec& spec) {
  switch (spec.corruption) {
    case Corruption::none: return 1;
    case Corruption::blur: return 2;
    case Corruption::ghost:
      return spec.task == LabelTask::binary ? 2 : static_cast<std::size_t>(spec.mirror.n_segments);
  }
  return 1;
}

int label_for(const ManifestRecord& record, std::size_t n_classes) {
  if (n_classes == 2) {
    return (record.k > 0 || record.corruption == Corruption::blur) ? 1 : 0;
  }
  return record.k;
}

DatasetManifest generate_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir) {
  validate(spec);
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "images").string() + ": " + ec.message());

  const std::size_t n = spec.n_images;
  const std::size_t classes = class_count(spec);
  const int n_seg = spec.mirror.n_segments;

  // Class i mod C keeps every class within one sample of the others.
  std::vector<std::size_t> class_of(n);
  for (std::size_t i = 0; i < n; ++i) class_of[i] = i % classes;

  // Stratified split: each class is shuffled and cut by the split fractions.
  std::vector<Split> split_of(n, Split::train);
  Rng split_rng = Rng::substream(spec.seed, kSplitStream);
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = c; i < n; i += classes) members.push_back(i);
    for (std::size_t i = members.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(split_rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
      std::swap(members[i - 1], members[j]);
    }
    const auto count = static_cast<double>(members.size());
    auto n_train = static_cast<std::size_t>(std::lround(spec.train_fraction * count));
    auto n_val = static_cast<std::size_t>(std::lround(spec.val_fraction * count));
    n_train = std::clamp<std::size_t>(n_train, 1, members.size());
    n_val = std::min(n_val, members.size() - n_train);
    for (std::size_t r = 0; r < members.size(); ++r) {
      split_of[members[r]] = r < n_train ? Split::train : (r < n_train + n_val ? Split::val : Split::test);
    }
  }

  std::vector<ManifestRecord> records(n);
  parallel_for(n, spec.jobs, [&](std::size_t i) {
    ManifestRecord rec;
    rec.seed = substream_seed(spec.seed, i);
    Rng rng(rec.seed);
    const std::uint64_t field_seed = rng.next();
    const double alpha = std::max(0.0, spec.spectral_exponent + spec.spectral_exponent_spread * (2.0 * rng.uniform() - 1.0));
    rec.n_segments = n_seg;
    rec.split = split_of[i];
    rec.corruption = spec.corruption;

    GrayImage img = ground_image(spec, i, field_seed, alpha);
    switch (spec.corruption) {
      case Corruption::none:
        rec.corruption = Corruption::none;
        break;
      case Corruption::ghost: {
        int k = 0;
        if (spec.task == LabelTask::intensity) {
          k = static_cast<int>(class_of[i]);
        } else if (class_of[i] == 1) {
          k = static_cast<int>(rng.uniform_int(1, n_seg - 1));
        }
        const GhostParams params = make_ghost_params(k, n_seg, spec.offset_mode, rng);
        rec.k = params.k_misaligned;
        rec.intensity = params.intensity;
        rec.tx = params.tx;
        rec.ty = params.ty;
        rec.corruption = k > 0 ? Corruption::ghost : Corruption::none;
        img = inject_ghost(img, params, spec.translation);
        break;
      }
      case Corruption::blur:
        if (class_of[i] == 1) {
          const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(spec.blur_sigmas.size()) - 1);
          rec.blur_sigma = spec.blur_sigmas[static_cast<std::size_t>(pick)];
          img = gaussian_blur(img, *rec.blur_sigma);
        } else {
          rec.corruption = Corruption::none;
        }
        break;
    }

    char name[32];
    std::snprintf(name, sizeof name, "img_%06zu.pgm", i);
    rec.path = std::string("images/") + name;
    pnm::write_pgm(out_dir / rec.path, img);
    records[i] = std::move(rec);
  });

  DatasetManifest manifest{out_dir, std::string(kRngAlgorithm), std::move(records)};
  write_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::ostringstream out;
  out << kManifestMagic << '\n';
  out << "# rng=" << (manifest.rng_algorithm.empty() ? kRngAlgorithm : manifest.rng_algorithm)
      << '\n';
  out << kManifestHeader << '\n';
  for (const auto& r : manifest.records) {
    if (r.path.find(',') != std::string::npos || r.path.find('\n') != std::string::npos) {
      throw ArgumentError("manifest paths may not contain commas or newlines: " + r.path);
    }
    out << r.path << ',' << r.n_segments << ',' << r.k << ',' << format_double(r.intensity) << ','
        << r.tx << ',' << r.ty << ',' << to_string(r.split) << ',' << to_string(r.corruption)
        << ',' << (r.blur_sigma ? format_double(*r.blur_sigma) : std::string()) << ',' << r.seed
        << '\n';
  }
  return out.str();
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  const std::string text = format_manifest(manifest);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

template <class T>
T parse_number(std::string_view field, std::size_t offset, const char* what) {
  T value{};
  const auto* begin = field.data();
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(std::string("bad ") + what + " '" + std::string(field) + "'", offset);
  }
  return value;
}

double parse_real(std::string_view field, std::size_t offset, const char* what) {
  // strtod rather than from_chars<double> for older standard libraries.
  const std::string s(field);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ParseError(std::string("bad ") + what + " '" + s + "'", offset);
  }
  return v;
}

}  // namespace

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& root) {
  DatasetManifest manifest{root, {}, {}};
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    const std::size_t line_offset = pos;
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.starts_with("# rng=")) manifest.rng_algorithm = std::string(line.substr(6));
      continue;
    }
    if (!saw_header) {
      if (line != kManifestHeader) throw ParseError("unexpected manifest header", line_offset);
      saw_header = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::vector<std::size_t> offsets;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? line.size() - start
                                                                          : comma - start));
      offsets.push_back(line_offset + start);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 10) {
      throw ParseError("expected 10 manifest fields, found " + std::to_string(fields.size()),
                       line_offset);
    }
    ManifestRecord r;
    r.path = std::string(fields[0]);
    r.n_segments = parse_number<int>(fields[1], offsets[1], "n_segments");
    r.k = parse_number<int>(fields[2], offsets[2], "k");
    r.intensity = parse_real(fields[3], offsets[3], "intensity");
    r.tx = parse_number<int>(fields[4], offsets[4], "tx");
    r.ty = parse_number<int>(fields[5], offsets[5], "ty");
    try {
      r.split = parse_split(fields[6]);
      r.corruption = parse_corruption(fields[7]);
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), offsets[6]);
    }
    if (!fields[8].empty()) r.blur_sigma = parse_real(fields[8], offsets[8], "blur_sigma");
    r.seed = parse_number<std::uint64_t>(fields[9], offsets[9], "seed");
    manifest.records.push_back(std::move(r));
  }
  if (!saw_header) throw ParseError("manifest has no header row", text.size());
  return manifest;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_manifest(text, path.parent_path());
}

std::vector<PatchSample> featurize_image(const GrayImage& img, std::size_t patch_size,
                                         std::size_t jobs) {
  const PatchSet set = extract_patches(img, patch_size);
  std::vector<PatchSample> out(set.patches.size());
  parallel_for(set.patches.size(), jobs, [&](std::size_t p) {
    out[p] = PatchSample{0, p / set.grid.cols, p % set.grid.cols, featurize(set.patches[p])};
  });
  return out;
}

std::vector<PatchSample> featurize_manifest(const DatasetManifest& manifest,
                                            std::size_t patch_size, std::optional<Split> split,
                                            std::size_t jobs) {
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    if (!split || manifest.records[i].split == *split) chosen.push_back(i);
  }
  std::vector<std::vector<PatchSample>> per_image(chosen.size());
  parallel_for(chosen.size(), jobs, [&](std::size_t j) {
    const auto& rec = manifest.records[chosen[j]];
    auto samples = featurize_image(pnm::read_gray(manifest.image_path(rec)), patch_size, 1);
    for (auto& s : samples) s.record = chosen[j];
    per_image[j] = std::move(samples);
  });
  std::vector<PatchSample> out;
  for (auto& v : per_image) {
    std::move(v.begin(), v.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace ghostdet
