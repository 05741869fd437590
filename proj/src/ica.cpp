#include "eogclean/ica.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eogclean/errors.hpp"
#include "eogclean/random.hpp"

namespace eogclean::ica {
namespace {

// (W W^T)^-1/2 W
Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w * w.transpose());
  const Eigen::VectorXd inv_sqrt = eig.eigenvalues().array().rsqrt();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose() * w;
}

const char* to_string(Nonlinearity g) { return g == Nonlinearity::tanh ? "tanh" : "cube"; }

Nonlinearity nonlinearity_from_string(const std::string& s) {
  if (s == "tanh") return Nonlinearity::tanh;
  if (s == "cube") return Nonlinearity::cube;
  throw SchemaError("unknown ICA nonlinearity '" + s + "'");
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw SchemaError("unmixing: matrix must have " + std::to_string(n) + " rows");
  }
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw SchemaError("unmixing: matrix must be square");
    }
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

}  // namespace

void IcaConfig::validate() const {
  if (!(tolerance > 0.0)) throw ArgumentError("ica: tolerance must be positive");
  if (max_iterations < 1) throw ArgumentError("ica: max_iterations must be at least 1");
}

Whitening whiten(const SignalMatrix& data) {
  const Eigen::Index n = data.rows();
  const Eigen::Index t = data.cols();
  if (n == 0 || t <= n) {
    throw ArgumentError("whiten: need more samples (" + std::to_string(t) + ") than channels (" +
                        std::to_string(n) + ")");
  }

  Whitening out;
  out.means = data.rowwise().mean();
  SignalMatrix centered = data.colwise() - out.means;
  const Eigen::MatrixXd cov = (centered * centered.transpose()) / static_cast<double>(t);

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(cov(i, i) > 0.0)) {
      throw DegeneracyError("whiten: channel " + std::to_string(i) + " has zero variance");
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw DegeneracyError("whiten: eigendecomposition failed");
  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd values = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  const double largest = values(0);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(values(k) > largest * 1e-12)) {
      throw DegeneracyError("whiten: covariance is rank deficient in dimension " +
                            std::to_string(k) + " of " + std::to_string(n));
    }
  }

  out.eigenvalues = values;
  out.matrix = values.array().rsqrt().matrix().asDiagonal() * vectors.transpose();
  out.data = out.matrix * centered;
  return out;
}

UnmixingMatrix fit_ica(const SignalMatrix& data, std::vector<std::string> labels,
                       const IcaConfig& config) {
  config.validate();
  const Eigen::Index n = data.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw SchemaError("fit_ica: label count does not match channel count");
  }

  const Whitening white = whiten(data);
  const SignalMatrix& z = white.data;
  const double t = static_cast<double>(z.cols());

  Rng rng(config.seed);
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) w(i, j) = rng.normal();
  }
  w = symmetric_decorrelation(w);

  UnmixingMatrix result;
  result.config = config;
  SignalMatrix y(n, z.cols());
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    y.noalias() = w * z;
    Eigen::VectorXd mean_derivative(n);
    if (config.nonlinearity == Nonlinearity::tanh) {
      y = y.array().tanh();
      mean_derivative = (1.0 - y.array().square()).rowwise().mean();
    } else {
      mean_derivative = 3.0 * y.array().square().rowwise().mean();
      y = y.array().cube();
    }
    Eigen::MatrixXd next = (y * z.transpose()) / t - mean_derivative.asDiagonal() * w;
    next = symmetric_decorrelation(next);

    const double change = (1.0 - (next * w.transpose()).diagonal().array().abs()).abs().maxCoeff();
    w = next;
    result.iterations = it;
    if (change < config.tolerance) {
      result.converged = true;
      break;
    }
  }

  Eigen::MatrixXd composed = w * white.matrix;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return composed.row(a).norm() > composed.row(b).norm();
  });
  Eigen::MatrixXd sorted(n, n);
  for (Eigen::Index i = 0; i < n; ++i) sorted.row(i) = composed.row(order[static_cast<std::size_t>(i)]);
  Eigen::MatrixXd mixing = sorted.partialPivLu().inverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index peak = 0;
    mixing.col(i).cwiseAbs().maxCoeff(&peak);
    if (mixing(peak, i) < 0.0) {
      sorted.row(i) = -sorted.row(i);
      mixing.col(i) = -mixing.col(i);
    }
  }

  result.w = sorted;
  result.mixing = mixing;
  result.whitener = white.matrix;
  result.means = white.means;
  result.channel_labels = std::move(labels);
  return result;
}

SignalMatrix to_matrix(const Recording& recording) {
  SignalMatrix m(static_cast<Eigen::Index>(recording.channel_count()),
                 static_cast<Eigen::Index>(recording.length()));
  for (std::size_t i = 0; i < recording.channel_count(); ++i) {
    const auto& s = recording.channel(i).samples;
    m.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  }
  return m;
}

UnmixingMatrix fit_ica(const Recording& recording, const IcaConfig& config) {
  if (recording.eog_index() || recording.trigger_index()) {
    throw SchemaError("fit_ica: exclude EOG and trigger channels before ICA");
  }
  return fit_ica(to_matrix(recording), recording.labels(), config);
}

ComponentSet unmix(const UnmixingMatrix& w, const Recording& recording) {
  if (recording.labels() != w.channel_labels) {
    throw SchemaError("unmix: recording channels do not match the unmixing matrix labels");
  }
  ComponentSet out;
  out.components = w.w * (to_matrix(recording).colwise() - w.means);
  out.trial_bounds = recording.trial_bounds();
  out.sample_rate = recording.sample_rate();
  out.source = std::make_shared<const UnmixingMatrix>(w);
  return out;
}

Recording remix(const UnmixingMatrix& w, const ComponentSet& components) {
  if (static_cast<Eigen::Index>(components.count()) != w.mixing.cols()) {
    throw SchemaError("remix: component count " + std::to_string(components.count()) +
                      " does not match unmixing dimension " + std::to_string(w.mixing.cols()));
  }
  const SignalMatrix x = (w.mixing * components.components).colwise() + w.means;
  std::vector<Channel> channels;
  channels.reserve(w.channel_labels.size());
  for (std::size_t i = 0; i < w.channel_labels.size(); ++i) {
    const auto row = x.row(static_cast<Eigen::Index>(i));
    channels.push_back(Channel{w.channel_labels[i], std::vector<double>(row.data(), row.data() + row.size())});
  }
  return Recording(components.sample_rate, std::move(channels), std::nullopt, std::nullopt,
                   components.trial_bounds);
}

nlohmann::json to_json(const UnmixingMatrix& w) {
  std::vector<double> means(w.means.data(), w.means.data() + w.means.size());
  return {{"channel_labels", w.channel_labels},
          {"w", matrix_to_json(w.w)},
          {"mixing", matrix_to_json(w.mixing)},
          {"whitener", matrix_to_json(w.whitener)},
          {"means", means},
          {"converged", w.converged},
          {"iterations", w.iterations},
          {"config",
           {{"max_iterations", w.config.max_iterations},
            {"tolerance", w.config.tolerance},
            {"seed", w.config.seed},
            {"nonlinearity", to_string(w.config.nonlinearity)}}}};
}

UnmixingMatrix unmixing_from_json(const nlohmann::json& j) {
  try {
    UnmixingMatrix w;
    w.channel_labels = j.at("channel_labels").get<std::vector<std::string>>();
    const auto n = static_cast<Eigen::Index>(w.channel_labels.size());
    w.w = matrix_from_json(j.at("w"), n);
    w.mixing = matrix_from_json(j.at("mixing"), n);
    w.whitener = matrix_from_json(j.at("whitener"), n);
    const auto means = j.at("means").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(means.size()) != n) throw SchemaError("unmixing: means size mismatch");
    w.means = Eigen::Map<const Eigen::VectorXd>(means.data(), n);
    w.converged = j.at("converged").get<bool>();
    w.iterations = j.at("iterations").get<std::size_t>();
    const auto& c = j.at("config");
    w.config.max_iterations = c.at("max_iterations").get<std::size_t>();
    w.config.tolerance = c.at("tolerance").get<double>();
    w.config.seed = c.at("seed").get<std::uint64_t>();
    w.config.nonlinearity = nonlinearity_from_string(c.at("nonlinearity").get<std::string>());
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("unmixing: ") + e.what());
  }
}

}  // namespace eogclean::ica
