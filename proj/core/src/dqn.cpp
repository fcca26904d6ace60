#include "dtx/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dtx/csv.hpp"
#include "dtx/errors.hpp"

namespace dtx::rl {

DuelingNet DuelingNet::make(int state_dim, const std::vector<int>& hidden, int actions,
                            Rng& rng) {
  if (hidden.empty()) throw std::invalid_argument("DuelingNet: need hidden sizes");
  DuelingNet net;
  std::vector<int> trunk_sizes;
  trunk_sizes.push_back(state_dim);
  for (int h : hidden) trunk_sizes.push_back(h);
  net.trunk = nn::Mlp::make(trunk_sizes, nn::Activation::Relu, rng);
  // The trunk's last layer keeps its rectifier.
  net.trunk.layers().back().act = nn::Activation::Relu;
  net.value = nn::Mlp::make({hidden.back(), 1}, nn::Activation::Identity, rng);
  net.adv = nn::Mlp::make({hidden.back(), actions}, nn::Activation::Identity, rng);
  return net;
}

Eigen::VectorXd DuelingNet::q_values(const Eigen::VectorXd& state) const {
  return q_values_batch(state).col(0);
}

Eigen::MatrixXd DuelingNet::q_values_batch(const Eigen::MatrixXd& states) const {
  const Eigen::MatrixXd h = trunk.forward_batch(states);
  const Eigen::MatrixXd u = value.forward_batch(h);  // 1 x B
  Eigen::MatrixXd a = adv.forward_batch(h);          // actions x B
  // Same floating-point order as the training path: (u + a) - mean(a).
  const Eigen::RowVectorXd mean = a.colwise().mean();
  a.rowwise() += u.row(0);
  a.rowwise() -= mean;
  return a;
}

int DuelingNet::param_count() const {
  return trunk.param_count() + value.param_count() + adv.param_count();
}

void DuelingNet::get_params(std::vector<double>& out) const {
  trunk.get_params(out);
  value.get_params(out);
  adv.get_params(out);
}

void DuelingNet::set_params(const std::vector<double>& in) {
  trunk.set_params(in, 0);
  value.set_params(in, static_cast<size_t>(trunk.param_count()));
  adv.set_params(in, static_cast<size_t>(trunk.param_count() + value.param_count()));
}

void ReplayMemory::push(Transition t) {
  if (buffer_.size() < capacity_) {
    buffer_.push_back(std::move(t));
  } else {
    buffer_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

std::vector<const Transition*> ReplayMemory::sample(size_t batch, Rng& rng) const {
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (size_t i = 0; i < batch; ++i)
    out.push_back(&buffer_[static_cast<size_t>(
        rng.uniform_int(0, static_cast<long>(buffer_.size()) - 1))]);
  return out;
}

double target_value(const DuelingNet& target, const Transition& t, double gamma) {
  if (t.done) return t.reward;
  return t.reward + gamma * target.q_values(t.next_state).maxCoeff();
}

int act(const DuelingNet& net, const Eigen::VectorXd& state, double epsilon, Rng& rng) {
  if (epsilon > 0.0 && rng.uniform01() < epsilon)
    return static_cast<int>(rng.uniform_int(0, net.actions() - 1));
  const Eigen::VectorXd q = net.q_values(state);
  int best = 0;
  for (int a = 1; a < q.size(); ++a)
    if (q[a] > q[best]) best = a;
  return best;
}

double td_loss(const DuelingNet& net, std::span<const Transition* const> batch,
               std::span<const double> targets) {
  const size_t n = batch.size();
  Eigen::MatrixXd states(net.state_dim(), n);
  for (size_t k = 0; k < n; ++k) states.col(static_cast<Eigen::Index>(k)) = batch[k]->state;
  const Eigen::MatrixXd q = net.q_values_batch(states);
  double loss = 0.0;
  for (size_t k = 0; k < n; ++k) {
    const double e = q(batch[k]->action, static_cast<Eigen::Index>(k)) - targets[k];
    loss += e * e;
  }
  return loss / static_cast<double>(n);
}

double td_loss_and_gradient(const DuelingNet& net,
                            std::span<const Transition* const> batch,
                            std::span<const double> targets, nn::Mlp::Grad& g_trunk,
                            nn::Mlp::Grad& g_value, nn::Mlp::Grad& g_adv) {
  const size_t n = batch.size();
  const int actions = net.actions();
  Eigen::MatrixXd states(net.state_dim(), n);
  for (size_t k = 0; k < n; ++k) states.col(static_cast<Eigen::Index>(k)) = batch[k]->state;

  nn::Mlp::Tape trunk_tape, value_tape, adv_tape;
  const Eigen::MatrixXd h = net.trunk.forward_batch(states, &trunk_tape);
  const Eigen::MatrixXd u = net.value.forward_batch(h, &value_tape);
  Eigen::MatrixXd a = net.adv.forward_batch(h, &adv_tape);
  const Eigen::RowVectorXd amean = a.colwise().mean();

  double loss = 0.0;
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(1, n);  // dLoss/dQ(s_k, a_k)
  for (size_t k = 0; k < n; ++k) {
    const Eigen::Index col = static_cast<Eigen::Index>(k);
    const double qv = u(0, col) + a(batch[k]->action, col) - amean[col];
    const double e = qv - targets[k];
    loss += e * e;
    dq(0, col) = 2.0 * e / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);

  // Through the aggregation: dU = dq; dA_j = dq * (1[j==a_k] - 1/|A|).
  Eigen::MatrixXd d_adv = Eigen::MatrixXd::Zero(actions, n);
  for (size_t k = 0; k < n; ++k) {
    const Eigen::Index col = static_cast<Eigen::Index>(k);
    const double g = dq(0, col);
    for (int j = 0; j < actions; ++j) d_adv(j, col) = -g / actions;
    d_adv(batch[k]->action, col) += g;
  }

  Eigen::MatrixXd dh_value, dh_adv;
  net.value.backward(value_tape, dq, g_value, &dh_value);
  net.adv.backward(adv_tape, d_adv, g_adv, &dh_adv);
  const Eigen::MatrixXd dh = dh_value + dh_adv;
  net.trunk.backward(trunk_tape, dh, g_trunk);
  return loss;
}

double train_step(DuelingNet& net, const DuelingNet& target,
                  std::span<const Transition* const> batch, double gamma, double lr,
                  DuelingAdam& opt) {
  std::vector<double> targets(batch.size());
  for (size_t k = 0; k < batch.size(); ++k) targets[k] = target_value(target, *batch[k], gamma);

  auto g_trunk = net.trunk.zero_grad();
  auto g_value = net.value.zero_grad();
  auto g_adv = net.adv.zero_grad();
  const double loss = td_loss_and_gradient(net, batch, targets, g_trunk, g_value, g_adv);
  if (!std::isfinite(loss))
    throw NonfiniteLoss("train_step: TD loss is not finite (batch of " +
                        std::to_string(batch.size()) + ")");
  opt.trunk.step(net.trunk, g_trunk, lr);
  opt.value.step(net.value, g_value, lr);
  opt.adv.step(net.adv, g_adv, lr);
  return loss;
}

namespace {
void copy_params(const DuelingNet& from, DuelingNet& to) {
  std::vector<double> flat;
  from.get_params(flat);
  to.set_params(flat);
}

void soft_update(const DuelingNet& from, DuelingNet& to, double tau) {
  std::vector<double> a, b;
  from.get_params(a);
  to.get_params(b);
  for (size_t i = 0; i < a.size(); ++i) b[i] += tau * (a[i] - b[i]);
  to.set_params(b);
}
}  // namespace

DqnAgent::DqnAgent(const AgentCfg& cfg, std::string name, long total_episodes, Rng rng)
    : cfg_(cfg),
      name_(std::move(name)),
      total_episodes_(std::max(1L, total_episodes)),
      rng_(rng),
      net_(DuelingNet::make(kStateDim, cfg.hidden, kNumActions, rng_)),
      target_(net_),
      opt_(net_),
      memory_(cfg.replay_capacity) {
  copy_params(net_, target_);
}

Eigen::VectorXd DqnAgent::make_state(const sched::SchedulerInput& input,
                                     const std::array<double, kNumQueues>& view,
                                     std::optional<size_t> gop_index) const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(kStateDim);
  for (int i = 0; i < kNumQueues; ++i) s[i] = view[static_cast<size_t>(i)] / cfg_.l_scale;
  s[5] = input.deficit_z / cfg_.z_scale;
  if (gop_index) {
    const auto& omega = (*input.omega)[*gop_index];
    for (int i = 0; i < kNumQueues; ++i)
      s[6 + i] = omega[static_cast<size_t>(i)] / cfg_.omega_scale;
    s[11] = input.gops[*gop_index].bits / cfg_.bits_scale;
  }
  return s;
}

std::vector<TranscodeDecision> DqnAgent::decide(const sched::SchedulerInput& input) {
  const auto& actions = feasible_decisions();
  std::array<double, kNumQueues> view = input.twin->length;

  Eigen::VectorXd first_state =
      make_state(input, view, input.gops.empty() ? std::nullopt
                                                 : std::make_optional<size_t>(0));
  if (training_ && awaiting_next_) flush_pending(first_state, false);

  std::vector<TranscodeDecision> out;
  out.reserve(input.gops.size());
  for (size_t k = 0; k < input.gops.size(); ++k) {
    Eigen::VectorXd s = (k == 0) ? first_state : make_state(input, view, k);
    const int a = act(net_, s, training_ ? epsilon_ : 0.0, rng_);
    const TranscodeDecision d = actions[static_cast<size_t>(a)];
    out.push_back(d);
    if (training_) pending_.push_back({std::move(s), a, 0.0});
    // Refresh the queue view with this GoP's cloud enqueue.
    for (auto q : cloud_queues())
      if (d.bit(q)) view[queue_index(q)] += (*input.seconds)[k][queue_index(q)];
  }
  return out;
}

void DqnAgent::observe_slot(const sched::SlotFeedback& fb) {
  if (!training_) return;
  if (!pending_.empty()) {
    if (cfg_.split_reward) {
      const double share = fb.reward / static_cast<double>(pending_.size());
      for (auto& p : pending_) p.reward = share;
    } else {
      pending_.back().reward = fb.reward;
    }
    // Intra-slot transitions chain to the next GoP's state; the slot's last
    // decision waits for the next slot (or termination).
    for (size_t j = 0; j + 1 < pending_.size(); ++j) {
      memory_.push({pending_[j].state, pending_[j].action, pending_[j].reward,
                    pending_[j + 1].state, false});
    }
    Pending last = std::move(pending_.back());
    pending_.clear();
    pending_.push_back(std::move(last));
    awaiting_next_ = true;
  }
  if (fb.done && awaiting_next_) {
    flush_pending(Eigen::VectorXd::Zero(kStateDim), true);
  }
  maybe_train();
}

void DqnAgent::flush_pending(const Eigen::VectorXd& next_state, bool done) {
  for (auto& p : pending_)
    memory_.push({std::move(p.state), p.action, p.reward, next_state, done});
  pending_.clear();
  awaiting_next_ = false;
}

void DqnAgent::maybe_train() {
  if (memory_.size() < std::max(cfg_.warmup, cfg_.batch_size)) return;
  const auto batch = memory_.sample(cfg_.batch_size, rng_);
  const double loss = train_step(net_, target_, batch, cfg_.gamma, cfg_.lr, opt_);
  loss_sum_ += loss;
  ++loss_count_;
  ++train_steps_;
  if (cfg_.soft_target) {
    soft_update(net_, target_, cfg_.tau);
  } else if (train_steps_ % cfg_.target_every == 0) {
    copy_params(net_, target_);
  }
}

void DqnAgent::begin_episode(long episode) {
  episode_ = episode;
  pending_.clear();
  awaiting_next_ = false;
  loss_sum_ = 0.0;
  loss_count_ = 0;
  const double horizon = cfg_.eps_fraction * static_cast<double>(total_episodes_);
  if (horizon <= 0.0) {
    epsilon_ = cfg_.eps_end;
  } else {
    const double frac = std::min(1.0, static_cast<double>(episode) / horizon);
    epsilon_ = cfg_.eps_start + frac * (cfg_.eps_end - cfg_.eps_start);
  }
}

double DqnAgent::mean_loss() const {
  return loss_count_ > 0 ? loss_sum_ / static_cast<double>(loss_count_) : 0.0;
}

void DqnAgent::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write agent file: " + path);
  out << "dtx-agent 1\n";
  out << "dims " << net_.state_dim();
  for (int h : cfg_.hidden) out << ' ' << h;
  out << ' ' << net_.actions() << '\n';
  out << "scales " << csv::num(cfg_.l_scale) << ' ' << csv::num(cfg_.z_scale) << ' '
      << csv::num(cfg_.omega_scale) << ' ' << csv::num(cfg_.bits_scale) << '\n';
  std::vector<double> flat;
  net_.get_params(flat);
  out << "params " << flat.size() << '\n';
  for (double v : flat) out << csv::num(v) << '\n';
}

DqnAgent DqnAgent::load(const std::string& path, std::string name, long total_episodes,
                        Rng rng) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read agent file: " + path);
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "dtx-agent" || version != 1)
    throw std::runtime_error("unrecognised agent file: " + path);

  in >> tag;  // dims
  std::vector<int> dims;
  {
    std::string line;
    std::getline(in, line);
    std::istringstream ls(line);
    int v;
    while (ls >> v) dims.push_back(v);
  }
  if (dims.size() < 3) throw std::runtime_error("agent file: bad dims line");

  AgentCfg cfg;
  cfg.hidden.assign(dims.begin() + 1, dims.end() - 1);
  in >> tag >> cfg.l_scale >> cfg.z_scale >> cfg.omega_scale >> cfg.bits_scale;
  size_t count = 0;
  in >> tag >> count;
  std::vector<double> flat(count);
  for (auto& v : flat) in >> v;
  if (!in) throw std::runtime_error("truncated agent file: " + path);

  DqnAgent agent(cfg, std::move(name), total_episodes, rng);
  agent.net_.set_params(flat);
  copy_params(agent.net_, agent.target_);
  return agent;
}

}  // namespace dtx::rl
