#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtx/nn.hpp"
#include "dtx/rng.hpp"
#include "dtx/sched.hpp"
#include "dtx/types.hpp"

namespace dtx::rl {

inline constexpr int kStateDim = 12;  // 5 lengths, deficit, 5 workloads, bit size

/// Value/advantage split Q-network over the 14 feasible decisions:
/// Q(s,a) = U(s) + A(s,a) - mean_a' A(s,a').
struct DuelingNet {
  nn::Mlp trunk;  // state -> hidden (rectifier layers)
  nn::Mlp value;  // hidden -> 1, linear
  nn::Mlp adv;    // hidden -> kNumActions, linear

  static DuelingNet make(int state_dim, const std::vector<int>& hidden, int actions,
                         Rng& rng);

  Eigen::VectorXd q_values(const Eigen::VectorXd& state) const;
  Eigen::MatrixXd q_values_batch(const Eigen::MatrixXd& states) const;

  int param_count() const;
  void get_params(std::vector<double>& out) const;
  void set_params(const std::vector<double>& in);
  int state_dim() const { return trunk.input_size(); }
  int actions() const { return adv.output_size(); }
};

struct Transition {
  Eigen::VectorXd state;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;
};

/// Fixed-capacity FIFO ring with uniform sampling (with replacement).
class ReplayMemory {
 public:
  explicit ReplayMemory(size_t capacity) : capacity_(capacity) {}
  void push(Transition t);
  size_t size() const { return buffer_.size(); }
  size_t capacity() const { return capacity_; }
  std::vector<const Transition*> sample(size_t batch, Rng& rng) const;
  const Transition& at(size_t i) const { return buffer_[i]; }

 private:
  size_t capacity_;
  size_t head_ = 0;
  std::vector<Transition> buffer_;
};

/// r + gamma * max_a Q(s', a) from the target network; just r when done.
double target_value(const DuelingNet& target, const Transition& t, double gamma);

/// Epsilon-greedy over the canonical action list; greedy ties break to the
/// lowest index.
int act(const DuelingNet& net, const Eigen::VectorXd& state, double epsilon, Rng& rng);

struct DuelingAdam {
  nn::Adam trunk, value, adv;
  explicit DuelingAdam(const DuelingNet& net)
      : trunk(net.trunk), value(net.value), adv(net.adv) {}
};

/// Mean squared TD error of the batch against fixed targets, plus its
/// analytic gradient through the dueling aggregation. Shared by the training
/// step and the finite-difference checks.
double td_loss(const DuelingNet& net, std::span<const Transition* const> batch,
               std::span<const double> targets);
double td_loss_and_gradient(const DuelingNet& net,
                            std::span<const Transition* const> batch,
                            std::span<const double> targets, nn::Mlp::Grad& g_trunk,
                            nn::Mlp::Grad& g_value, nn::Mlp::Grad& g_adv);

/// One optimisation step: targets from the target network, squared TD error,
/// one Adam update. Returns the pre-update loss; throws NonfiniteLoss.
double train_step(DuelingNet& net, const DuelingNet& target,
                  std::span<const Transition* const> batch, double gamma, double lr,
                  DuelingAdam& opt);

struct AgentCfg {
  std::vector<int> hidden = {64, 64};
  double lr = 1e-4;
  double gamma = 0.99;
  size_t batch_size = 32;
  size_t replay_capacity = 5000;
  size_t warmup = 500;           // transitions before training starts
  long target_every = 100;       // hard-copy period, in training steps
  bool soft_target = false;      // Polyak updates instead of hard copies
  double tau = 1e-3;             // soft-update coefficient
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_fraction = 0.3;     // fraction of episodes over which eps decays
  bool split_reward = true;      // share the slot reward across its GoPs
  // State normalisation scales.
  double l_scale = 1.5;
  double z_scale = 5.0;
  double omega_scale = 3000.0;
  double bits_scale = 1.2e7;
};

/// DQN-driven scheduler. Within a slot, GoPs are decided sequentially with
/// the queue view refreshed by each provisional enqueue; the slot reward is
/// attributed to the slot's last decision (or split evenly when configured).
class DqnAgent : public sched::Scheduler {
 public:
  DqnAgent(const AgentCfg& cfg, std::string name, long total_episodes, Rng rng);

  std::string name() const override { return name_; }
  std::vector<TranscodeDecision> decide(const sched::SchedulerInput& input) override;
  void begin_episode(long episode) override;
  void observe_slot(const sched::SlotFeedback& fb) override;

  void set_training(bool on) { training_ = on; }
  double epsilon() const { return epsilon_; }
  double mean_loss() const;  // mean over the current episode's train steps
  long train_steps() const { return train_steps_; }

  const DuelingNet& net() const { return net_; }
  const DuelingNet& target_net() const { return target_; }
  const ReplayMemory& memory() const { return memory_; }
  const AgentCfg& cfg() const { return cfg_; }

  Eigen::VectorXd make_state(const sched::SchedulerInput& input,
                             const std::array<double, kNumQueues>& view,
                             std::optional<size_t> gop_index) const;

  void save(const std::string& path) const;
  static DqnAgent load(const std::string& path, std::string name, long total_episodes,
                       Rng rng);

 private:
  void flush_pending(const Eigen::VectorXd& next_state, bool done);
  void maybe_train();

  AgentCfg cfg_;
  std::string name_;
  long total_episodes_ = 1;
  Rng rng_;
  DuelingNet net_;
  DuelingNet target_;
  DuelingAdam opt_;
  ReplayMemory memory_;

  bool training_ = true;
  double epsilon_ = 0.0;
  long episode_ = 0;
  long train_steps_ = 0;
  double loss_sum_ = 0.0;
  long loss_count_ = 0;

  struct Pending {
    Eigen::VectorXd state;
    int action = 0;
    double reward = 0.0;
  };
  std::vector<Pending> pending_;
  bool awaiting_next_ = false;  // pending_ holds last slot's decisions
};

}  // namespace dtx::rl
