#include "irsim/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace irsim::nn {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using nlohmann::json;

int NetSpec::output_width() const {
  int width = input_width;
  for (const LayerSpec& layer : layers)
    if (layer.kind == LayerSpec::Kind::kDense) width = layer.out;
  return width;
}

void NetSpec::check() const {
  if (input_width < 1) throw std::invalid_argument("NetSpec: empty input");
  int width = input_width;
  for (const LayerSpec& layer : layers) {
    switch (layer.kind) {
      case LayerSpec::Kind::kDense:
        if (layer.in != width)
          throw std::invalid_argument("NetSpec: dense input width mismatch");
        width = layer.out;
        break;
      case LayerSpec::Kind::kBatchNorm:
        if (layer.in != width)
          throw std::invalid_argument("NetSpec: batch-norm width mismatch");
        if (layer.norm_width < 1 || layer.norm_width > layer.in)
          throw std::invalid_argument("NetSpec: batch-norm normalized span");
        break;
      case LayerSpec::Kind::kActivation:
        break;
    }
  }
}

NetSpec NetSpec::actor(int state_dim, int action_dim, int hidden1,
                       int hidden2) {
  NetSpec spec;
  spec.input_width = state_dim;
  spec.layers = {LayerSpec::dense(state_dim, hidden1),
                 LayerSpec::activation(Activation::kRelu),
                 LayerSpec::dense(hidden1, hidden2),
                 LayerSpec::activation(Activation::kRelu),
                 LayerSpec::batch_norm(hidden2),
                 LayerSpec::dense(hidden2, action_dim),
                 LayerSpec::activation(Activation::kTanh)};
  spec.check();
  return spec;
}

NetSpec NetSpec::critic(int state_dim, int action_dim, int hidden1,
                        int hidden2) {
  const int joint = state_dim + action_dim;
  NetSpec spec;
  spec.input_width = joint;
  spec.layers = {LayerSpec::partial_batch_norm(joint, state_dim),
                 LayerSpec::dense(joint, hidden2),
                 LayerSpec::activation(Activation::kRelu),
                 LayerSpec::dense(hidden2, hidden1),
                 LayerSpec::activation(Activation::kRelu),
                 LayerSpec::dense(hidden1, 1)};
  spec.check();
  return spec;
}

Net::Net(NetSpec spec) : spec_(std::move(spec)) {
  spec_.check();
  layers_.reserve(spec_.layers.size());
  for (const LayerSpec& ls : spec_.layers) {
    Layer layer;
    layer.spec = ls;
    switch (ls.kind) {
      case LayerSpec::Kind::kDense:
        layer.w = MatrixXd::Zero(ls.in, ls.out);
        layer.b = RowVectorXd::Zero(ls.out);
        break;
      case LayerSpec::Kind::kBatchNorm:
        layer.gamma = RowVectorXd::Ones(ls.norm_width);
        layer.beta = RowVectorXd::Zero(ls.norm_width);
        layer.run_mean = RowVectorXd::Zero(ls.norm_width);
        layer.run_var = RowVectorXd::Ones(ls.norm_width);
        break;
      case LayerSpec::Kind::kActivation:
        break;
    }
    layers_.push_back(std::move(layer));
  }
}

void Net::init_params(RngStream& rng) {
  int last_dense = -1;
  for (int i = 0; i < static_cast<int>(layers_.size()); ++i)
    if (layers_[i].spec.kind == LayerSpec::Kind::kDense) last_dense = i;

  for (int i = 0; i < static_cast<int>(layers_.size()); ++i) {
    Layer& layer = layers_[i];
    if (layer.spec.kind != LayerSpec::Kind::kDense) continue;
    const double bound = (i == last_dense)
                             ? 3e-3
                             : 1.0 / std::sqrt(static_cast<double>(layer.spec.in));
    for (int r = 0; r < layer.w.rows(); ++r)
      for (int c = 0; c < layer.w.cols(); ++c)
        layer.w(r, c) = rng.uniform(-bound, bound);
    for (int c = 0; c < layer.b.size(); ++c)
      layer.b(c) = rng.uniform(-bound, bound);
  }
}

MatrixXd Net::forward(const MatrixXd& input, ForwardMode mode,
                      ForwardCache* cache, bool update_running_stats) {
  if (input.cols() != spec_.input_width)
    throw std::invalid_argument("Net::forward: input width " +
                                std::to_string(input.cols()) + ", expected " +
                                std::to_string(spec_.input_width));
  if (mode == ForwardMode::kTrain && input.rows() == 0)
    throw std::invalid_argument("Net::forward: empty batch in train mode");

  if (cache) {
    cache->mode = mode;
    cache->inputs.assign(layers_.size(), MatrixXd());
    cache->bn_xhat.assign(layers_.size(), MatrixXd());
    cache->bn_inv_std.assign(layers_.size(), RowVectorXd());
  }

  MatrixXd x = input;
  const double batch = static_cast<double>(input.rows());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Layer& layer = layers_[i];
    if (cache) cache->inputs[i] = x;
    switch (layer.spec.kind) {
      case LayerSpec::Kind::kDense:
        x = (x * layer.w).rowwise() + layer.b;
        break;
      case LayerSpec::Kind::kBatchNorm: {
        const int span = layer.spec.norm_width;
        MatrixXd block = x.leftCols(span);
        if (mode == ForwardMode::kTrain) {
          const RowVectorXd mean = block.colwise().mean();
          const MatrixXd centered = block.rowwise() - mean;
          const RowVectorXd var = centered.array().square().colwise().mean();
          const RowVectorXd inv_std =
              (var.array() + kBnEpsilon).sqrt().inverse();
          const MatrixXd xhat = centered.array().rowwise() * inv_std.array();
          if (update_running_stats && batch > 0) {
            layer.run_mean =
                kBnMomentum * layer.run_mean + (1.0 - kBnMomentum) * mean;
            layer.run_var =
                kBnMomentum * layer.run_var + (1.0 - kBnMomentum) * var;
          }
          if (cache) {
            cache->bn_xhat[i] = xhat;
            cache->bn_inv_std[i] = inv_std;
          }
          x.leftCols(span) =
              (xhat.array().rowwise() * layer.gamma.array()).rowwise() +
              layer.beta.array();
        } else {
          const RowVectorXd inv_std =
              (layer.run_var.array() + kBnEpsilon).sqrt().inverse();
          x.leftCols(span) =
              (((block.rowwise() - layer.run_mean).array().rowwise() *
                inv_std.array())
                   .rowwise() *
               layer.gamma.array())
                  .rowwise() +
              layer.beta.array();
        }
        break;
      }
      case LayerSpec::Kind::kActivation:
        if (layer.spec.act == Activation::kRelu)
          x = x.cwiseMax(0.0);
        else
          x = x.array().tanh();
        break;
    }
  }
  return x;
}

MatrixXd Net::backward(const ForwardCache& cache, const MatrixXd& output_grad,
                       Grads* grads) const {
  if (cache.mode != ForwardMode::kTrain)
    throw std::invalid_argument("Net::backward: cache must be train-mode");
  if (cache.inputs.size() != layers_.size())
    throw std::invalid_argument("Net::backward: cache does not match net");

  if (grads) {
    grads->assign(layers_.size(), LayerGrads{});
  }

  MatrixXd dy = output_grad;
  for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
    const Layer& layer = layers_[i];
    const MatrixXd& x = cache.inputs[i];
    switch (layer.spec.kind) {
      case LayerSpec::Kind::kDense: {
        if (grads) {
          (*grads)[i].dw = x.transpose() * dy;
          (*grads)[i].db = dy.colwise().sum();
        }
        dy = dy * layer.w.transpose();
        break;
      }
      case LayerSpec::Kind::kBatchNorm: {
        const MatrixXd& xhat = cache.bn_xhat[i];
        const RowVectorXd& inv_std = cache.bn_inv_std[i];
        if (xhat.size() == 0)
          throw std::invalid_argument(
              "Net::backward: batch-norm cache missing");
        const int span = layer.spec.norm_width;
        const MatrixXd dy_block = dy.leftCols(span);
        if (grads) {
          (*grads)[i].dgamma =
              (dy_block.array() * xhat.array()).colwise().sum();
          (*grads)[i].dbeta = dy_block.colwise().sum();
        }
        const double batch = static_cast<double>(dy.rows());
        const MatrixXd dxhat =
            dy_block.array().rowwise() * layer.gamma.array();
        const RowVectorXd sum_dxhat = dxhat.colwise().sum();
        const RowVectorXd sum_dxhat_xhat =
            (dxhat.array() * xhat.array()).colwise().sum();
        MatrixXd dx = batch * dxhat;
        dx.rowwise() -= sum_dxhat;
        dx -= (xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
        dx.array().rowwise() *= (inv_std / batch).array();
        dy.leftCols(span) = dx;
        break;
      }
      case LayerSpec::Kind::kActivation: {
        if (layer.spec.act == Activation::kRelu) {
          dy = (x.array() > 0.0).select(dy, 0.0);
        } else {
          const MatrixXd t = x.array().tanh();
          dy = dy.array() * (1.0 - t.array().square());
        }
        break;
      }
    }
  }
  return dy;
}

namespace {

json matrix_to_json(const MatrixXd& m) {
  json flat = json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  return flat;
}

MatrixXd matrix_from_json(const json& flat, int rows, int cols) {
  if (static_cast<int>(flat.size()) != rows * cols)
    throw std::runtime_error("net json: tensor size mismatch");
  MatrixXd m(rows, cols);
  int k = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = flat[k++].get<double>();
  return m;
}

json rowvec_to_json(const RowVectorXd& v) {
  json flat = json::array();
  for (int c = 0; c < v.size(); ++c) flat.push_back(v(c));
  return flat;
}

RowVectorXd rowvec_from_json(const json& flat, int size) {
  if (static_cast<int>(flat.size()) != size)
    throw std::runtime_error("net json: vector size mismatch");
  RowVectorXd v(size);
  for (int c = 0; c < size; ++c) v(c) = flat[c].get<double>();
  return v;
}

}  // namespace

json Net::to_json() const {
  json j;
  j["input_width"] = spec_.input_width;
  json layers = json::array();
  for (const Layer& layer : layers_) {
    json lj;
    switch (layer.spec.kind) {
      case LayerSpec::Kind::kDense:
        lj["kind"] = "dense";
        lj["in"] = layer.spec.in;
        lj["out"] = layer.spec.out;
        lj["w"] = matrix_to_json(layer.w);
        lj["b"] = rowvec_to_json(layer.b);
        break;
      case LayerSpec::Kind::kBatchNorm:
        lj["kind"] = "bn";
        lj["width"] = layer.spec.in;
        lj["norm_width"] = layer.spec.norm_width;
        lj["gamma"] = rowvec_to_json(layer.gamma);
        lj["beta"] = rowvec_to_json(layer.beta);
        lj["run_mean"] = rowvec_to_json(layer.run_mean);
        lj["run_var"] = rowvec_to_json(layer.run_var);
        break;
      case LayerSpec::Kind::kActivation:
        lj["kind"] = "act";
        lj["fn"] = layer.spec.act == Activation::kRelu ? "relu" : "tanh";
        break;
    }
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j;
}

Net Net::from_json(const json& j) {
  NetSpec spec;
  spec.input_width = j.at("input_width").get<int>();
  for (const json& lj : j.at("layers")) {
    const std::string kind = lj.at("kind").get<std::string>();
    if (kind == "dense")
      spec.layers.push_back(
          LayerSpec::dense(lj.at("in").get<int>(), lj.at("out").get<int>()));
    else if (kind == "bn")
      spec.layers.push_back(LayerSpec::partial_batch_norm(
          lj.at("width").get<int>(),
          lj.value("norm_width", lj.at("width").get<int>())));
    else if (kind == "act")
      spec.layers.push_back(LayerSpec::activation(
          lj.at("fn").get<std::string>() == "tanh" ? Activation::kTanh
                                                   : Activation::kRelu));
    else
      throw std::runtime_error("net json: unknown layer kind '" + kind + "'");
  }
  Net net(spec);
  const json& layers = j.at("layers");
  for (std::size_t i = 0; i < net.layers_.size(); ++i) {
    Layer& layer = net.layers_[i];
    const json& lj = layers[i];
    switch (layer.spec.kind) {
      case LayerSpec::Kind::kDense:
        layer.w = matrix_from_json(lj.at("w"), layer.spec.in, layer.spec.out);
        layer.b = rowvec_from_json(lj.at("b"), layer.spec.out);
        break;
      case LayerSpec::Kind::kBatchNorm: {
        const int span = layer.spec.norm_width;
        layer.gamma = rowvec_from_json(lj.at("gamma"), span);
        layer.beta = rowvec_from_json(lj.at("beta"), span);
        layer.run_mean = rowvec_from_json(lj.at("run_mean"), span);
        layer.run_var = rowvec_from_json(lj.at("run_var"), span);
        break;
      }
      case LayerSpec::Kind::kActivation:
        break;
    }
  }
  return net;
}

bool Net::operator==(const Net& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& a = layers_[i];
    const Layer& b = other.layers_[i];
    if (a.spec.kind != b.spec.kind) return false;
    if (a.w != b.w || a.b != b.b) return false;
    if (a.gamma != b.gamma || a.beta != b.beta) return false;
    if (a.run_mean != b.run_mean || a.run_var != b.run_var) return false;
  }
  return true;
}

AdamState AdamState::zeros_like(const Net& net) {
  AdamState state;
  state.m.resize(net.layers().size());
  state.v.resize(net.layers().size());
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    const Layer& layer = net.layers()[i];
    for (auto* moments : {&state.m, &state.v}) {
      LayerGrads& g = (*moments)[i];
      if (layer.spec.kind == LayerSpec::Kind::kDense) {
        g.dw = MatrixXd::Zero(layer.spec.in, layer.spec.out);
        g.db = RowVectorXd::Zero(layer.spec.out);
      } else if (layer.spec.kind == LayerSpec::Kind::kBatchNorm) {
        g.dgamma = RowVectorXd::Zero(layer.spec.norm_width);
        g.dbeta = RowVectorXd::Zero(layer.spec.norm_width);
      }
    }
  }
  return state;
}

json AdamState::to_json() const {
  json j;
  j["step_count"] = step_count;
  json layers = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json lj;
    if (m[i].dw.size() > 0) {
      lj["w_rows"] = static_cast<int>(m[i].dw.rows());
      lj["w_cols"] = static_cast<int>(m[i].dw.cols());
      lj["m_w"] = matrix_to_json(m[i].dw);
      lj["v_w"] = matrix_to_json(v[i].dw);
      lj["m_b"] = rowvec_to_json(m[i].db);
      lj["v_b"] = rowvec_to_json(v[i].db);
    }
    if (m[i].dgamma.size() > 0) {
      lj["m_gamma"] = rowvec_to_json(m[i].dgamma);
      lj["v_gamma"] = rowvec_to_json(v[i].dgamma);
      lj["m_beta"] = rowvec_to_json(m[i].dbeta);
      lj["v_beta"] = rowvec_to_json(v[i].dbeta);
    }
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j;
}

AdamState AdamState::from_json(const json& j) {
  AdamState state;
  state.step_count = j.at("step_count").get<long>();
  const json& layers = j.at("layers");
  state.m.resize(layers.size());
  state.v.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const json& lj = layers[i];
    if (lj.contains("m_w")) {
      const int rows = lj.at("w_rows").get<int>();
      const int cols = lj.at("w_cols").get<int>();
      state.m[i].dw = matrix_from_json(lj.at("m_w"), rows, cols);
      state.v[i].dw = matrix_from_json(lj.at("v_w"), rows, cols);
      state.m[i].db = rowvec_from_json(lj.at("m_b"),
                                       static_cast<int>(lj.at("m_b").size()));
      state.v[i].db = rowvec_from_json(lj.at("v_b"),
                                       static_cast<int>(lj.at("v_b").size()));
    }
    if (lj.contains("m_gamma")) {
      state.m[i].dgamma = rowvec_from_json(
          lj.at("m_gamma"), static_cast<int>(lj.at("m_gamma").size()));
      state.v[i].dgamma = rowvec_from_json(
          lj.at("v_gamma"), static_cast<int>(lj.at("v_gamma").size()));
      state.m[i].dbeta = rowvec_from_json(
          lj.at("m_beta"), static_cast<int>(lj.at("m_beta").size()));
      state.v[i].dbeta = rowvec_from_json(
          lj.at("v_beta"), static_cast<int>(lj.at("v_beta").size()));
    }
  }
  return state;
}

namespace {

void adam_update(Eigen::Ref<MatrixXd> param, const MatrixXd& grad,
                 MatrixXd& m, MatrixXd& v, double lr, double bc1, double bc2) {
  m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
  v = kAdamBeta2 * v.array().matrix() +
      (1.0 - kAdamBeta2) * grad.array().square().matrix();
  param.array() -= lr * (m.array() / bc1) /
                   ((v.array() / bc2).sqrt() + kAdamEpsilon);
}

void adam_update_row(RowVectorXd& param, const RowVectorXd& grad,
                     RowVectorXd& m, RowVectorXd& v, double lr, double bc1,
                     double bc2) {
  m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * grad;
  v = kAdamBeta2 * v.array().matrix() +
      (1.0 - kAdamBeta2) * grad.array().square().matrix();
  param.array() -= lr * (m.array() / bc1) /
                   ((v.array() / bc2).sqrt() + kAdamEpsilon);
}

}  // namespace

void adam_step(Net& net, const Grads& grads, AdamState& state, double lr) {
  if (grads.size() != net.layers().size() ||
      state.m.size() != net.layers().size())
    throw std::invalid_argument("adam_step: shape bookkeeping mismatch");
  ++state.step_count;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, state.step_count);
  const double bc2 = 1.0 - std::pow(kAdamBeta2, state.step_count);

  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    Layer& layer = net.layers()[i];
    if (layer.spec.kind == LayerSpec::Kind::kDense) {
      adam_update(layer.w, grads[i].dw, state.m[i].dw, state.v[i].dw, lr, bc1,
                  bc2);
      adam_update_row(layer.b, grads[i].db, state.m[i].db, state.v[i].db, lr,
                      bc1, bc2);
    } else if (layer.spec.kind == LayerSpec::Kind::kBatchNorm) {
      adam_update_row(layer.gamma, grads[i].dgamma, state.m[i].dgamma,
                      state.v[i].dgamma, lr, bc1, bc2);
      adam_update_row(layer.beta, grads[i].dbeta, state.m[i].dbeta,
                      state.v[i].dbeta, lr, bc1, bc2);
    }
  }
}

void soft_update(Net& target, const Net& online, double tau) {
  if (target.layers().size() != online.layers().size())
    throw std::invalid_argument("soft_update: nets differ in structure");
  for (std::size_t i = 0; i < target.layers().size(); ++i) {
    Layer& t = target.layers()[i];
    const Layer& o = online.layers()[i];
    if (t.spec.kind != o.spec.kind)
      throw std::invalid_argument("soft_update: layer kind mismatch");
    if (t.spec.kind == LayerSpec::Kind::kDense) {
      t.w = (1.0 - tau) * t.w + tau * o.w;
      t.b = (1.0 - tau) * t.b + tau * o.b;
    } else if (t.spec.kind == LayerSpec::Kind::kBatchNorm) {
      t.gamma = (1.0 - tau) * t.gamma + tau * o.gamma;
      t.beta = (1.0 - tau) * t.beta + tau * o.beta;
      t.run_mean = (1.0 - tau) * t.run_mean + tau * o.run_mean;
      t.run_var = (1.0 - tau) * t.run_var + tau * o.run_var;
    }
  }
}

}  // namespace irsim::nn
