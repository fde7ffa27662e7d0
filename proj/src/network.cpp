#include "lscd/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "lscd/rng.hpp"

namespace lscd {

namespace {

void validate_arch(const ArchSpec& arch) {
  if (arch.input_dim == 0) throw std::invalid_argument("ArchSpec: input_dim must be >= 1");
  if (arch.num_classes < 2) {
    throw std::invalid_argument("ArchSpec: num_classes must be >= 2");
  }
  if (arch.hidden.empty()) {
    throw std::invalid_argument(
        "ArchSpec: need at least one hidden block (adaptation trains batch-norm "
        "parameters)");
  }
  for (std::size_t h : arch.hidden) {
    if (h == 0) throw std::invalid_argument("ArchSpec: hidden widths must be >= 1");
  }
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
  const std::size_t n = x.rows, in = x.cols, out_dim = layer.weight.rows;
  Matrix out(n, out_dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t o = 0; o < out_dim; ++o) {
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < in; ++i) acc += layer.weight(o, i) * x(r, i);
      out(r, o) = acc;
    }
  }
  return out;
}

// gx = g * W  (n x out times out x in -> n x in)
Matrix dense_backward_input(const DenseLayer& layer, const Matrix& g) {
  const std::size_t n = g.rows, out_dim = layer.weight.rows, in = layer.weight.cols;
  Matrix gx(n, in);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < out_dim; ++o) acc += g(r, o) * layer.weight(o, i);
      gx(r, i) = acc;
    }
  }
  return gx;
}

void dense_param_grads(const Matrix& g, const Matrix& input, Matrix& dweight,
                       std::vector<double>& dbias) {
  const std::size_t n = g.rows, out_dim = g.cols, in = input.cols;
  for (std::size_t o = 0; o < out_dim; ++o) {
    double bsum = 0.0;
    for (std::size_t r = 0; r < n; ++r) bsum += g(r, o);
    dbias[o] = bsum;
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) acc += g(r, o) * input(r, i);
      dweight(o, i) = acc;
    }
  }
}

}  // namespace

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& d : dense) n += d.weight.data.size() + d.bias.size();
  for (const BatchNormLayer& b : bn) n += b.gamma.size() + b.beta_shift.size();
  return n;
}

Network init_network(const ArchSpec& arch, std::uint64_t seed) {
  validate_arch(arch);
  DetRng rng(seed);
  Network net;
  net.arch = arch;
  std::size_t in = arch.input_dim;
  auto make_dense = [&](std::size_t fan_in, std::size_t fan_out) {
    DenseLayer d;
    d.weight = Matrix(fan_out, fan_in);
    double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& w : d.weight.data) w = rng.normal() * scale;
    d.bias.assign(fan_out, 0.0);
    return d;
  };
  for (std::size_t h : arch.hidden) {
    net.dense.push_back(make_dense(in, h));
    BatchNormLayer b;
    b.gamma.assign(h, 1.0);
    b.beta_shift.assign(h, 0.0);
    b.running_mean.assign(h, 0.0);
    b.running_var.assign(h, 1.0);
    net.bn.push_back(std::move(b));
    in = h;
  }
  net.dense.push_back(make_dense(in, arch.num_classes));
  return net;
}

ForwardTrace forward(const Network& net, const Matrix& batch, BnMode mode) {
  if (batch.cols != net.arch.input_dim) {
    throw std::invalid_argument(
        "forward: batch has " + std::to_string(batch.cols) + " features, network expects " +
        std::to_string(net.arch.input_dim));
  }
  if (batch.rows == 0) throw std::invalid_argument("forward: empty batch");
  if (mode == BnMode::kBatchStats && batch.rows < 2) {
    throw std::invalid_argument(
        "forward: batch-stats mode needs at least 2 samples per batch, got " +
        std::to_string(batch.rows));
  }
  const std::size_t n = batch.rows;
  ForwardTrace tr;
  tr.mode = mode;
  tr.batch_size = n;
  tr.blocks.resize(net.num_blocks());
  Matrix x = batch;
  for (std::size_t b = 0; b < net.num_blocks(); ++b) {
    BlockTrace& blk = tr.blocks[b];
    blk.dense_in = std::move(x);
    Matrix pre = dense_forward(net.dense[b], blk.dense_in);
    const std::size_t h = pre.cols;
    const BatchNormLayer& bn = net.bn[b];
    blk.mu.assign(h, 0.0);
    blk.var.assign(h, 0.0);
    if (mode == BnMode::kBatchStats) {
      for (std::size_t j = 0; j < h; ++j) {
        double m = 0.0;
        for (std::size_t r = 0; r < n; ++r) m += pre(r, j);
        m /= static_cast<double>(n);
        double v = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          double d = pre(r, j) - m;
          v += d * d;
        }
        v /= static_cast<double>(n);  // biased, 1/n
        blk.mu[j] = m;
        blk.var[j] = v;
      }
    } else {
      blk.mu = bn.running_mean;
      blk.var = bn.running_var;
    }
    blk.inv_std.assign(h, 0.0);
    for (std::size_t j = 0; j < h; ++j) {
      blk.inv_std[j] = 1.0 / std::sqrt(blk.var[j] + bn.eps_bn);
    }
    blk.x_hat = Matrix(n, h);
    blk.bn_out = Matrix(n, h);
    Matrix act(n, h);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < h; ++j) {
        double xh = (pre(r, j) - blk.mu[j]) * blk.inv_std[j];
        blk.x_hat(r, j) = xh;
        double o = bn.gamma[j] * xh + bn.beta_shift[j];
        blk.bn_out(r, j) = o;
        act(r, j) = o > 0.0 ? o : 0.0;
      }
    }
    x = std::move(act);
  }
  tr.head_in = x;
  tr.logits = dense_forward(net.dense.back(), tr.head_in);
  return tr;
}

void update_running_stats(Network& net, const ForwardTrace& trace) {
  if (trace.mode != BnMode::kBatchStats) {
    throw std::invalid_argument("update_running_stats: trace must be batch-stats");
  }
  for (std::size_t b = 0; b < net.num_blocks(); ++b) {
    BatchNormLayer& bn = net.bn[b];
    double m = bn.stats_momentum;
    for (std::size_t j = 0; j < bn.gamma.size(); ++j) {
      bn.running_mean[j] = (1.0 - m) * bn.running_mean[j] + m * trace.blocks[b].mu[j];
      bn.running_var[j] = (1.0 - m) * bn.running_var[j] + m * trace.blocks[b].var[j];
    }
  }
}

GradientSet zero_gradients(const Network& net) {
  GradientSet g;
  for (const DenseLayer& d : net.dense) {
    g.dweight.emplace_back(d.weight.rows, d.weight.cols);
    g.dbias.emplace_back(d.bias.size(), 0.0);
  }
  for (const BatchNormLayer& b : net.bn) {
    g.dgamma.emplace_back(b.gamma.size(), 0.0);
    g.dbeta.emplace_back(b.beta_shift.size(), 0.0);
  }
  return g;
}

GradientSet backward(const Network& net, const ForwardTrace& trace,
                     const Matrix& dlogits, ParamSelection selection) {
  if (trace.mode != BnMode::kBatchStats) {
    throw std::invalid_argument(
        "backward: trace must come from a batch-stats forward");
  }
  if (trace.blocks.size() != net.num_blocks()) {
    throw std::invalid_argument("backward: trace does not match this network");
  }
  if (dlogits.rows != trace.batch_size || dlogits.cols != net.arch.num_classes) {
    throw std::invalid_argument("backward: dlogits shape does not match the trace");
  }
  const std::size_t n = trace.batch_size;
  GradientSet grads = zero_gradients(net);

  const DenseLayer& head = net.dense.back();
  if (selection == ParamSelection::kAll) {
    dense_param_grads(dlogits, trace.head_in, grads.dweight.back(), grads.dbias.back());
  }
  Matrix gx = dense_backward_input(head, dlogits);

  for (std::size_t bi = net.num_blocks(); bi-- > 0;) {
    const BlockTrace& blk = trace.blocks[bi];
    const BatchNormLayer& bn = net.bn[bi];
    const std::size_t h = bn.gamma.size();

    // relu
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < h; ++j) {
        if (!(blk.bn_out(r, j) > 0.0)) gx(r, j) = 0.0;
      }
    }

    // batch-norm affine parameters
    for (std::size_t j = 0; j < h; ++j) {
      double dg = 0.0, db = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        dg += gx(r, j) * blk.x_hat(r, j);
        db += gx(r, j);
      }
      grads.dgamma[bi][j] = dg;
      grads.dbeta[bi][j] = db;
    }

    // through the normalization itself: mu and var are functions of the
    // batch, so each input picks up the mean-gradient corrections
    //   dx = inv_std * (dxhat - mean(dxhat) - x_hat * mean(dxhat * x_hat)).
    Matrix gpre(n, h);
    for (std::size_t j = 0; j < h; ++j) {
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        double dxh = gx(r, j) * bn.gamma[j];
        m1 += dxh;
        m2 += dxh * blk.x_hat(r, j);
      }
      m1 /= static_cast<double>(n);
      m2 /= static_cast<double>(n);
      for (std::size_t r = 0; r < n; ++r) {
        double dxh = gx(r, j) * bn.gamma[j];
        gpre(r, j) = blk.inv_std[j] * (dxh - m1 - blk.x_hat(r, j) * m2);
      }
    }

    if (selection == ParamSelection::kAll) {
      dense_param_grads(gpre, blk.dense_in, grads.dweight[bi], grads.dbias[bi]);
    }
    if (bi > 0) gx = dense_backward_input(net.dense[bi], gpre);
  }
  return grads;
}

// ---------------------------------------------------------------------------
// checkpoint io

namespace {

constexpr char kMagic[7] = {'L', 'S', 'C', 'D', 'N', 'E', 'T'};
constexpr std::uint8_t kFormatVersion = 1;

static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Cursor {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    }
    pos += 8;
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  void f64_array(std::vector<double>& out, std::size_t count) {
    out.resize(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = f64();
  }
};

}  // namespace

void save_network(const Network& net, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  out.push_back(static_cast<char>(kFormatVersion));
  put_u32(out, static_cast<std::uint32_t>(net.arch.input_dim));
  put_u32(out, static_cast<std::uint32_t>(net.arch.hidden.size()));
  for (std::size_t h : net.arch.hidden) put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(net.arch.num_classes));
  for (std::size_t b = 0; b < net.num_blocks(); ++b) {
    for (double v : net.dense[b].weight.data) put_f64(out, v);
    for (double v : net.dense[b].bias) put_f64(out, v);
    const BatchNormLayer& bn = net.bn[b];
    for (double v : bn.gamma) put_f64(out, v);
    for (double v : bn.beta_shift) put_f64(out, v);
    for (double v : bn.running_mean) put_f64(out, v);
    for (double v : bn.running_var) put_f64(out, v);
    put_f64(out, bn.eps_bn);
    put_f64(out, bn.stats_momentum);
  }
  for (double v : net.dense.back().weight.data) put_f64(out, v);
  for (double v : net.dense.back().bias) put_f64(out, v);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Network load_network(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Cursor c{buf};

  c.need(sizeof(kMagic));
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic (not a network checkpoint)");
  }
  c.pos += sizeof(kMagic);
  c.need(1);
  std::uint8_t version = static_cast<std::uint8_t>(buf[c.pos++]);
  if (version != kFormatVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " +
                             std::to_string(version) + " (expected " +
                             std::to_string(kFormatVersion) + ")");
  }

  ArchSpec arch;
  arch.input_dim = c.u32();
  std::uint32_t n_hidden = c.u32();
  constexpr std::uint32_t kMaxDim = 1u << 20;
  if (n_hidden == 0 || n_hidden > 64) {
    throw std::runtime_error("checkpoint: architecture header has invalid dimensions");
  }
  arch.hidden.resize(n_hidden);
  for (std::uint32_t i = 0; i < n_hidden; ++i) arch.hidden[i] = c.u32();
  arch.num_classes = c.u32();
  if (arch.input_dim == 0 || arch.input_dim > kMaxDim || arch.num_classes < 2 ||
      arch.num_classes > kMaxDim) {
    throw std::runtime_error("checkpoint: architecture header has invalid dimensions");
  }
  for (std::size_t h : arch.hidden) {
    if (h == 0 || h > kMaxDim) {
      throw std::runtime_error("checkpoint: architecture header has invalid dimensions");
    }
  }

  Network net;
  net.arch = arch;
  std::size_t in = arch.input_dim;
  for (std::size_t h : arch.hidden) {
    DenseLayer d;
    d.weight = Matrix(h, in);
    c.f64_array(d.weight.data, h * in);
    c.f64_array(d.bias, h);
    BatchNormLayer bn;
    c.f64_array(bn.gamma, h);
    c.f64_array(bn.beta_shift, h);
    c.f64_array(bn.running_mean, h);
    c.f64_array(bn.running_var, h);
    bn.eps_bn = c.f64();
    bn.stats_momentum = c.f64();
    net.dense.push_back(std::move(d));
    net.bn.push_back(std::move(bn));
    in = h;
  }
  DenseLayer head;
  head.weight = Matrix(arch.num_classes, in);
  c.f64_array(head.weight.data, arch.num_classes * in);
  c.f64_array(head.bias, arch.num_classes);
  net.dense.push_back(std::move(head));

  if (c.pos != buf.size()) {
    throw std::runtime_error("checkpoint: trailing bytes after the final tensor");
  }
  return net;
}

}  // namespace lscd
