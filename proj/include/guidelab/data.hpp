#pragma once

#include "guidelab/binary_io.hpp"
#include "guidelab/core.hpp"
#include "guidelab/random.hpp"
#include "guidelab/text.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace guidelab {

enum class ManifoldKind { gaussian_mixture, rings, moons };

inline const char* to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::gaussian_mixture: return "gaussian_mixture";
    case ManifoldKind::rings: return "rings";
    case ManifoldKind::moons: return "moons";
  }
  return "gaussian_mixture";
}

struct MixtureComponent {
  double weight = 1.0;
  Vector mean;
  double sigma = 1.0;  // standard deviation on the plane coordinates
};

/// Analytic description of a labeled data distribution in R^dim.
///
/// Mixtures: component k has class k, mean mean_k, standard deviation sigma_k on
/// coordinates [0, plane_dim) and ambient_sigma on the remaining coordinates
/// (plane_dim == dim gives isotropic components).
/// Rings and moons live in the first two coordinates, with isotropic jitter
/// plane_sigma there and ambient_sigma elsewhere.
struct ManifoldDescriptor {
  ManifoldKind kind = ManifoldKind::gaussian_mixture;
  int dim = 2;
  int plane_dim = 2;
  double ambient_sigma = 0.0;
  std::vector<MixtureComponent> components;
  std::vector<double> weights;  // rings / moons class weights
  std::vector<double> radii;    // rings, one per class
  double plane_sigma = 0.0;
  double scale = 1.0;  // moons

  int num_classes() const {
    return kind == ManifoldKind::gaussian_mixture ? static_cast<int>(components.size())
                                                  : static_cast<int>(weights.size());
  }

  double class_weight(int k) const {
    return kind == ManifoldKind::gaussian_mixture ? components.at(static_cast<std::size_t>(k)).weight
                                                  : weights.at(static_cast<std::size_t>(k));
  }

  /// Per-coordinate variance of mixture component k at zero noise.
  Vector variances(int k) const {
    const auto& c = components.at(static_cast<std::size_t>(k));
    Vector v = Vector::Constant(dim, ambient_sigma * ambient_sigma);
    v.head(plane_dim).setConstant(c.sigma * c.sigma);
    return v;
  }

  void validate() const {
    require(dim >= 2, "descriptor: dim must be at least 2");
    const int classes = num_classes();
    require(classes >= 1, "descriptor: needs at least one class");
    double total = 0.0;
    for (int k = 0; k < classes; ++k) {
      require(class_weight(k) >= 0.0, "descriptor: negative class weight");
      total += class_weight(k);
    }
    require(std::abs(total - 1.0) <= 1e-12, "descriptor: weights must sum to 1");
    switch (kind) {
      case ManifoldKind::gaussian_mixture:
        require(plane_dim >= 1 && plane_dim <= dim, "descriptor: plane_dim must lie in [1, dim]");
        require(plane_dim == dim || ambient_sigma > 0.0, "descriptor: ambient_sigma must be positive");
        for (const auto& c : components) {
          require(c.mean.size() == dim, "descriptor: component mean has wrong dimension");
          require(c.mean.allFinite(), "descriptor: component mean must be finite");
          require(c.sigma > 0.0, "descriptor: component sigma must be positive");
        }
        break;
      case ManifoldKind::rings:
        require(radii.size() == weights.size(), "descriptor: rings need one radius per class");
        [[fallthrough]];
      case ManifoldKind::moons:
        require(plane_sigma > 0.0, "descriptor: plane_sigma must be positive");
        require(dim == 2 || ambient_sigma > 0.0, "descriptor: ambient_sigma must be positive");
        if (kind == ManifoldKind::moons) require(weights.size() == 2, "descriptor: moons have two classes");
        break;
    }
  }

  /// Canonical line-oriented text; doubles are written in shortest round-trip form.
  std::string to_text() const {
    std::ostringstream out;
    out << "kind = " << to_string(kind) << '\n';
    out << "dim = " << dim << '\n';
    out << "ambient_sigma = " << text::format(ambient_sigma) << '\n';
    out << "classes = " << num_classes() << '\n';
    if (kind == ManifoldKind::gaussian_mixture) {
      out << "plane_dim = " << plane_dim << '\n';
      for (std::size_t k = 0; k < components.size(); ++k) {
        out << "class." << k << ".weight = " << text::format(components[k].weight) << '\n';
        out << "class." << k << ".sigma = " << text::format(components[k].sigma) << '\n';
        out << "class." << k << ".mean = " << text::join(components[k].mean) << '\n';
      }
    } else {
      out << "plane_sigma = " << text::format(plane_sigma) << '\n';
      if (kind == ManifoldKind::moons) out << "scale = " << text::format(scale) << '\n';
      for (std::size_t k = 0; k < weights.size(); ++k) {
        out << "class." << k << ".weight = " << text::format(weights[k]) << '\n';
        if (kind == ManifoldKind::rings) out << "class." << k << ".radius = " << text::format(radii[k]) << '\n';
      }
    }
    return out.str();
  }

  static ManifoldDescriptor from_text(std::string_view source) {
    std::map<std::string, std::string, std::less<>> kv;
    for (auto line : text::split(source, '\n')) {
      line = text::trim(line);
      if (line.empty() || line.front() == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw InvalidArgument("descriptor: malformed line '" + std::string(line) + "'");
      kv[std::string(text::trim(line.substr(0, eq)))] = std::string(text::trim(line.substr(eq + 1)));
    }
    auto get = [&](const std::string& key) -> const std::string& {
      const auto it = kv.find(key);
      if (it == kv.end()) throw InvalidArgument("descriptor: missing key '" + key + "'");
      return it->second;
    };
    ManifoldDescriptor d;
    const std::string& kind = get("kind");
    if (kind == "gaussian_mixture") d.kind = ManifoldKind::gaussian_mixture;
    else if (kind == "rings") d.kind = ManifoldKind::rings;
    else if (kind == "moons") d.kind = ManifoldKind::moons;
    else throw InvalidArgument("descriptor: unknown kind '" + kind + "'");
    d.dim = static_cast<int>(text::parse_int(get("dim"), "dim"));
    d.ambient_sigma = text::parse_double(get("ambient_sigma"), "ambient_sigma");
    const auto classes = text::parse_int(get("classes"), "classes");
    require(classes >= 1 && classes <= 1'000'000, "descriptor: bad class count");
    for (long long k = 0; k < classes; ++k) {
      const std::string prefix = "class." + std::to_string(k) + ".";
      const double weight = text::parse_double(get(prefix + "weight"), prefix + "weight");
      if (d.kind == ManifoldKind::gaussian_mixture) {
        MixtureComponent c;
        c.weight = weight;
        c.sigma = text::parse_double(get(prefix + "sigma"), prefix + "sigma");
        c.mean = text::parse_vector(get(prefix + "mean"), prefix + "mean");
        d.components.push_back(std::move(c));
      } else {
        d.weights.push_back(weight);
        if (d.kind == ManifoldKind::rings) d.radii.push_back(text::parse_double(get(prefix + "radius"), prefix + "radius"));
      }
    }
    if (d.kind == ManifoldKind::gaussian_mixture) {
      d.plane_dim = static_cast<int>(text::parse_int(get("plane_dim"), "plane_dim"));
    } else {
      d.plane_dim = 2;
      d.plane_sigma = text::parse_double(get("plane_sigma"), "plane_sigma");
      if (d.kind == ManifoldKind::moons) d.scale = text::parse_double(get("scale"), "scale");
    }
    d.validate();
    return d;
  }

  friend bool operator==(const ManifoldDescriptor& a, const ManifoldDescriptor& b) {
    return a.to_text() == b.to_text();
  }
};

/// Equal-weight isotropic Gaussians at angles 2*pi*k/classes on a circle in the
/// first two coordinates, with small ambient jitter in the remaining ones.
inline ManifoldDescriptor gmm_circle(int classes = 8, double radius = 10.0, double sigma = 0.5, int dim = 64,
                                     double ambient_sigma = 0.01) {
  require(classes >= 1, "gmm_circle: need at least one class");
  ManifoldDescriptor d;
  d.kind = ManifoldKind::gaussian_mixture;
  d.dim = dim;
  d.plane_dim = 2;
  d.ambient_sigma = ambient_sigma;
  for (int k = 0; k < classes; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / classes;
    MixtureComponent c;
    c.weight = 1.0 / classes;
    c.mean = Vector::Zero(dim);
    c.mean[0] = radius * std::cos(angle);
    c.mean[1] = radius * std::sin(angle);
    c.sigma = sigma;
    d.components.push_back(std::move(c));
  }
  d.validate();
  return d;
}

/// Isotropic mixture with explicit means; plane_dim == dim.
inline ManifoldDescriptor isotropic_mixture(const std::vector<Vector>& means, double sigma,
                                            std::vector<double> weights = {}) {
  require(!means.empty(), "isotropic_mixture: need at least one mean");
  if (weights.empty()) weights.assign(means.size(), 1.0 / static_cast<double>(means.size()));
  ManifoldDescriptor d;
  d.dim = static_cast<int>(means.front().size());
  d.plane_dim = d.dim;
  for (std::size_t k = 0; k < means.size(); ++k) d.components.push_back({weights[k], means[k], sigma});
  d.validate();
  return d;
}

inline ManifoldDescriptor rings(std::vector<double> radii, double plane_sigma, int dim, double ambient_sigma) {
  ManifoldDescriptor d;
  d.kind = ManifoldKind::rings;
  d.dim = dim;
  d.weights.assign(radii.size(), 1.0 / static_cast<double>(radii.size()));
  d.radii = std::move(radii);
  d.plane_sigma = plane_sigma;
  d.ambient_sigma = ambient_sigma;
  d.validate();
  return d;
}

inline ManifoldDescriptor moons(double scale, double plane_sigma, int dim, double ambient_sigma) {
  ManifoldDescriptor d;
  d.kind = ManifoldKind::moons;
  d.dim = dim;
  d.weights = {0.5, 0.5};
  d.scale = scale;
  d.plane_sigma = plane_sigma;
  d.ambient_sigma = ambient_sigma;
  d.validate();
  return d;
}

struct LabeledDataset {
  PointMatrix points;
  std::vector<int> labels;
  int num_classes = 0;
  std::optional<ManifoldDescriptor> descriptor;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return points.rows(); }
  int dim() const { return static_cast<int>(points.cols()); }

  void validate() const {
    require(points.rows() >= 1, "dataset: needs at least one point");
    require(static_cast<Eigen::Index>(labels.size()) == points.rows(), "dataset: one label per point");
    for (int y : labels) require(y >= 0 && y < num_classes, "dataset: label out of range");
  }

  /// The first n rows, as a new dataset.
  LabeledDataset head(Eigen::Index n) const {
    require(n >= 1 && n <= size(), "dataset head: bad row count");
    LabeledDataset out{points.topRows(n), {labels.begin(), labels.begin() + n}, num_classes, descriptor, seed};
    return out;
  }

  friend bool operator==(const LabeledDataset& a, const LabeledDataset& b) {
    return a.points.rows() == b.points.rows() && a.points.cols() == b.points.cols() &&
           std::memcmp(a.points.data(), b.points.data(), sizeof(double) * static_cast<std::size_t>(a.points.size())) == 0 &&
           a.labels == b.labels && a.num_classes == b.num_classes && a.descriptor == b.descriptor &&
           a.seed == b.seed;
  }
};

namespace detail {

inline int draw_class(const ManifoldDescriptor& d, RandomStream& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  const int classes = d.num_classes();
  for (int k = 0; k < classes; ++k) {
    cumulative += d.class_weight(k);
    if (u < cumulative) return k;
  }
  for (int k = classes - 1; k >= 0; --k) {
    if (d.class_weight(k) > 0.0) return k;
  }
  return classes - 1;
}

}  // namespace detail

/// n i.i.d. labeled draws. Point i uses its own random stream, so the output is a
/// pure function of (descriptor, n, seed).
inline LabeledDataset generate(const ManifoldDescriptor& descriptor, Eigen::Index n, std::uint64_t seed) {
  descriptor.validate();
  require(n >= 1, "generate: n must be positive");
  const int D = descriptor.dim;
  LabeledDataset out;
  out.points.resize(n, D);
  out.labels.resize(static_cast<std::size_t>(n));
  out.num_classes = descriptor.num_classes();
  out.descriptor = descriptor;
  out.seed = seed;
  for (Eigen::Index i = 0; i < n; ++i) {
    RandomStream rng(seed, StreamPurpose::data, static_cast<std::uint64_t>(i));
    const int k = detail::draw_class(descriptor, rng);
    out.labels[static_cast<std::size_t>(i)] = k;
    auto row = out.points.row(i);
    switch (descriptor.kind) {
      case ManifoldKind::gaussian_mixture: {
        const auto& c = descriptor.components[static_cast<std::size_t>(k)];
        for (int j = 0; j < D; ++j) {
          const double sd = j < descriptor.plane_dim ? c.sigma : descriptor.ambient_sigma;
          row[j] = c.mean[j] + sd * rng.normal();
        }
        break;
      }
      case ManifoldKind::rings:
      case ManifoldKind::moons: {
        double px = 0.0;
        double py = 0.0;
        if (descriptor.kind == ManifoldKind::rings) {
          const double angle = 2.0 * std::numbers::pi * rng.uniform();
          const double r = descriptor.radii[static_cast<std::size_t>(k)];
          px = r * std::cos(angle);
          py = r * std::sin(angle);
        } else {
          const double angle = std::numbers::pi * rng.uniform();
          px = k == 0 ? std::cos(angle) : 1.0 - std::cos(angle);
          py = k == 0 ? std::sin(angle) : 0.5 - std::sin(angle);
          px *= descriptor.scale;
          py *= descriptor.scale;
        }
        row[0] = px + descriptor.plane_sigma * rng.normal();
        row[1] = py + descriptor.plane_sigma * rng.normal();
        for (int j = 2; j < D; ++j) row[j] = descriptor.ambient_sigma * rng.normal();
        break;
      }
    }
  }
  return out;
}

inline constexpr std::string_view kDatasetMagic = "GLAB";
inline constexpr std::uint16_t kDatasetVersion = 1;

inline std::vector<unsigned char> encode_dataset(const LabeledDataset& data) {
  data.validate();
  io::ByteWriter w;
  w.u64(static_cast<std::uint64_t>(data.size()));
  w.u32(static_cast<std::uint32_t>(data.dim()));
  w.u32(static_cast<std::uint32_t>(data.num_classes));
  w.u64(data.seed);
  w.u8(data.descriptor ? 1 : 0);
  w.text(data.descriptor ? data.descriptor->to_text() : std::string{});
  for (Eigen::Index i = 0; i < data.points.size(); ++i) w.f64(data.points.data()[i]);
  for (int y : data.labels) w.u32(static_cast<std::uint32_t>(y));
  return io::frame(kDatasetMagic, kDatasetVersion, w.bytes());
}

inline LabeledDataset decode_dataset(const std::vector<unsigned char>& file) {
  const auto payload = io::unframe(kDatasetMagic, kDatasetVersion, file);
  io::ByteReader r(payload.data(), payload.size());
  LabeledDataset data;
  const std::uint64_t n = r.u64();
  const std::uint32_t dim = r.u32();
  data.num_classes = static_cast<int>(r.u32());
  data.seed = r.u64();
  const bool has_descriptor = r.u8() != 0;
  const std::string descriptor = r.text();
  if (n == 0 || dim == 0) throw FormatError(FormatError::Kind::malformed, "empty dataset header");
  if (r.remaining() != n * dim * 8 + n * 4) {
    throw FormatError(FormatError::Kind::malformed, "payload size does not match header");
  }
  try {
    if (has_descriptor) data.descriptor = ManifoldDescriptor::from_text(descriptor);
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatError::Kind::malformed, std::string("bad descriptor: ") + e.what());
  }
  data.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < data.points.size(); ++i) data.points.data()[i] = r.f64();
  data.labels.resize(n);
  for (auto& y : data.labels) y = static_cast<int>(r.u32());
  try {
    data.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatError::Kind::malformed, e.what());
  }
  return data;
}

inline void save(const LabeledDataset& data, const std::string& path) { io::write_file(path, encode_dataset(data)); }

inline LabeledDataset load_dataset(const std::string& path) { return decode_dataset(io::read_file(path)); }

}  // namespace guidelab
