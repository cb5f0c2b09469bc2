#pragma once

#include <map>
#include <string>
#include <vector>

#include "qdyn/tensor.hpp"

namespace qdyn {

using GradMap = std::map<std::string, Tensor>;

// Handle to a node on a Tape.
struct Value {
    int id = -1;
};

// Define-by-run reverse-mode tape. Nodes are appended in evaluation order,
// so the recording is topologically sorted by construction. A tape is
// single-threaded; run independent tapes for parallel work.
class Tape {
  public:
    // Non-trainable input.
    Value constant(Tensor t);
    // Trainable leaf registered under a unique name.
    Value param(const std::string& name, Tensor t);

    Value matmul(Value a, Value b);
    Value transpose(Value a);
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value hadamard(Value a, Value b);
    Value scale(Value a, double c);
    Value add_row(Value a, Value row);
    Value tanh(Value a);
    Value relu(Value a);
    Value softmax_rows(Value a);
    Value layer_norm(Value a, Value gamma, Value beta, double eps);
    Value concat_cols(const std::vector<Value>& parts);
    Value flatten_row(Value a);
    // Sum of all entries as a 1x1 node.
    Value sum(Value a);

    const Tensor& val(Value v) const;
    size_t node_count() const { return nodes_.size(); }

    // Reverse pass from a scalar (1x1) loss node. Returns one gradient per
    // registered param, zero-filled for params the loss never touched.
    GradMap backward(Value loss) const;

    // Drops all nodes and registrations, keeping allocated capacity.
    void reset();

  private:
    enum class Op {
        Constant,
        Param,
        MatMul,
        Transpose,
        Add,
        Sub,
        Hadamard,
        Scale,
        AddRow,
        Tanh,
        Relu,
        SoftmaxRows,
        LayerNorm,
        ConcatCols,
        FlattenRow,
        Sum,
    };

    struct Node {
        Op op;
        Tensor value;
        int a = -1;
        int b = -1;
        int c = -1;
        double scalar = 0.0;
        std::vector<int> inputs;  // ConcatCols only
        Tensor aux;               // LayerNorm: normalized rows
        std::vector<double> aux_vec;  // LayerNorm: per-row 1/sqrt(var+eps)
        std::string name;         // Param only
    };

    Value push(Node node);
    const Node& node(Value v) const;

    std::vector<Node> nodes_;
    std::map<std::string, int> params_;
};

}  // namespace qdyn
