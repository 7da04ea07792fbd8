#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lawin/common.hpp"

namespace lawin {

// Dense N-d array over float or double. Value-semantic handle onto shared
// storage; ops never mutate inputs. The grad buffer is the one mutable
// part and only backward passes and optimizers touch it.
template <typename T>
struct TensorStorage {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;  // sized lazily, matches values when present
    bool requires_grad = false;
};

template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    static Tensor zeros(Shape shape) {
        Tensor t;
        t.d_ = std::make_shared<TensorStorage<T>>();
        t.d_->shape = std::move(shape);
        t.d_->values.assign(static_cast<std::size_t>(numel_of(t.d_->shape)), T(0));
        return t;
    }

    static Tensor full(Shape shape, T v) {
        Tensor t = zeros(std::move(shape));
        for (auto& x : t.d_->values) x = v;
        return t;
    }

    static Tensor from(Shape shape, std::vector<T> values) {
        if (numel_of(shape) != static_cast<index_t>(values.size()))
            throw ShapeError(str("tensor init: shape ", shape_str(shape), " holds ",
                                 numel_of(shape), " values, got ", values.size()));
        Tensor t;
        t.d_ = std::make_shared<TensorStorage<T>>();
        t.d_->shape = std::move(shape);
        t.d_->values = std::move(values);
        return t;
    }

    static Tensor scalar(T v) { return from({}, {v}); }

    bool defined() const { return d_ != nullptr; }
    const Shape& shape() const { return d_->shape; }
    int rank() const { return static_cast<int>(d_->shape.size()); }
    index_t numel() const { return static_cast<index_t>(d_->values.size()); }

    index_t dim(int i) const {
        const int r = rank();
        if (i < 0) i += r;
        if (i < 0 || i >= r)
            throw ShapeError(str("dim ", i, " out of range for rank ", r));
        return d_->shape[static_cast<std::size_t>(i)];
    }

    T* data() { return d_->values.data(); }
    const T* data() const { return d_->values.data(); }
    std::vector<T>& values() { return d_->values; }
    const std::vector<T>& values() const { return d_->values; }

    T item() const {
        if (numel() != 1)
            throw ShapeError(str("item() on tensor of ", numel(), " elements"));
        return d_->values[0];
    }

    bool requires_grad() const { return d_ && d_->requires_grad; }
    Tensor& set_requires_grad(bool v) {
        d_->requires_grad = v;
        return *this;
    }

    bool has_grad() const { return !d_->grad.empty(); }
    std::vector<T>& grad() { return d_->grad; }
    const std::vector<T>& grad() const { return d_->grad; }
    T* grad_data() { return d_->grad.data(); }
    const T* grad_data() const { return d_->grad.data(); }

    void ensure_zero_grad() {
        d_->grad.assign(d_->values.size(), T(0));
    }

    // identity of the underlying storage, for tape bookkeeping
    TensorStorage<T>* storage() const { return d_.get(); }

    bool all_finite() const {
        for (const T v : d_->values)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

private:
    std::shared_ptr<TensorStorage<T>> d_;
};

template <typename T>
void assert_finite(const Tensor<T>& t, const char* what) {
    if (!t.all_finite())
        throw NumericError(str("non-finite values in ", what));
}

// Define-by-run gradient tape. Ops append a backward closure per recorded
// step; backward() zeroes the grads of every tensor seen on the tape,
// seeds the scalar loss and replays the closures in reverse order, so each
// requires_grad tensor ends up holding exactly d(loss)/d(tensor).
// One tape per worker; do not share an active tape across threads.
template <typename T>
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape*& active_slot() {
        thread_local Tape* slot = nullptr;
        return slot;
    }
    static Tape* active() { return active_slot(); }

    class Scope {
    public:
        explicit Scope(Tape& t) : prev_(active_slot()) { active_slot() = &t; }
        ~Scope() { active_slot() = prev_; }
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

    private:
        Tape* prev_;
    };

    void record(std::vector<Tensor<T>> involved, std::function<void()> backward) {
        steps_.push_back(Step{std::move(involved), std::move(backward)});
    }

    std::size_t size() const { return steps_.size(); }
    void clear() { steps_.clear(); }

    void backward(Tensor<T> loss) {
        if (loss.numel() != 1)
            throw ShapeError(str("backward requires a scalar loss, got shape ",
                                 shape_str(loss.shape())));
        std::unordered_set<TensorStorage<T>*> seen;
        for (auto& step : steps_) {
            for (auto& t : step.tensors) {
                if (t.requires_grad() && seen.insert(t.storage()).second)
                    t.ensure_zero_grad();
            }
        }
        if (!loss.requires_grad()) return;  // loss independent of any leaf
        if (!seen.count(loss.storage())) loss.ensure_zero_grad();
        loss.grad()[0] = T(1);
        for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) it->backward();
    }

private:
    struct Step {
        std::vector<Tensor<T>> tensors;
        std::function<void()> backward;
    };
    std::vector<Step> steps_;
};

// Convenience used by op implementations: record when grads are needed.
template <typename T>
bool grad_recording_needed(std::initializer_list<const Tensor<T>*> inputs) {
    if (Tape<T>::active() == nullptr) return false;
    for (const Tensor<T>* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

}  // namespace lawin
