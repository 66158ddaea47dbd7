#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "onnx.pb.h"

namespace curvseg::testing {

// Minimal graph assembly for tests. Dims of 0 become symbolic.
class GraphBuilder {
 public:
  GraphBuilder() { m_.set_ir_version(8); m_.add_opset_import()->set_version(17); }

  GraphBuilder& input(const std::string& name, const std::vector<std::int64_t>& dims) {
    describe(m_.mutable_graph()->add_input(), name, dims);
    return *this;
  }
  GraphBuilder& output(const std::string& name, const std::vector<std::int64_t>& dims) {
    describe(m_.mutable_graph()->add_output(), name, dims);
    return *this;
  }
  GraphBuilder& init(const std::string& name, const std::vector<std::int64_t>& dims, const std::vector<float>& v) {
    auto* t = m_.mutable_graph()->add_initializer();
    t->set_name(name);
    t->set_data_type(onnx::TensorProto::FLOAT);
    for (auto d : dims) t->add_dims(d);
    for (float x : v) t->add_float_data(x);
    return *this;
  }
  onnx::NodeProto& node(const std::string& op, const std::vector<std::string>& in,
                        const std::vector<std::string>& out) {
    auto* n = m_.mutable_graph()->add_node();
    n->set_op_type(op);
    n->set_name(op + std::to_string(m_.graph().node_size()));
    for (const auto& s : in) n->add_input(s);
    for (const auto& s : out) n->add_output(s);
    return *n;
  }
  std::string bytes() const { return m_.SerializeAsString(); }

  static void set(onnx::NodeProto& n, const std::string& k, std::int64_t v) {
    auto* a = n.add_attribute();
    a->set_name(k);
    a->set_type(onnx::AttributeProto::INT);
    a->set_i(v);
  }
  static void set(onnx::NodeProto& n, const std::string& k, float v) {
    auto* a = n.add_attribute();
    a->set_name(k);
    a->set_type(onnx::AttributeProto::FLOAT);
    a->set_f(v);
  }
  static void set(onnx::NodeProto& n, const std::string& k, const std::string& v) {
    auto* a = n.add_attribute();
    a->set_name(k);
    a->set_type(onnx::AttributeProto::STRING);
    a->set_s(v);
  }
  static void set(onnx::NodeProto& n, const std::string& k, const std::vector<std::int64_t>& v) {
    auto* a = n.add_attribute();
    a->set_name(k);
    a->set_type(onnx::AttributeProto::INTS);
    for (auto x : v) a->add_ints(x);
  }

 private:
  static void describe(onnx::ValueInfoProto* v, const std::string& name, const std::vector<std::int64_t>& dims) {
    v->set_name(name);
    auto* tt = v->mutable_type()->mutable_tensor_type();
    tt->set_elem_type(onnx::TensorProto::FLOAT);
    auto* shape = tt->mutable_shape();
    for (std::size_t i = 0; i < dims.size(); ++i) {
      auto* d = shape->add_dim();
      if (dims[i] > 0) d->set_dim_value(dims[i]);
      else d->set_dim_param("d" + std::to_string(i));
    }
  }

  onnx::ModelProto m_;
};

// Stack of `depth` k^d mean filters with "same" padding: receptive field
// radius depth * (k / 2). Input and output are (1, 1, spatial...) with
// symbolic spatial dims unless `fixed` is given.
inline std::string box_stack_model(int spatial, int depth, int k, std::vector<std::int64_t> fixed = {}) {
  GraphBuilder g;
  std::vector<std::int64_t> io{1, 1};
  for (int i = 0; i < spatial; ++i) io.push_back(fixed.empty() ? 0 : fixed[std::size_t(i)]);
  g.input("x", io).output("y", io);
  std::vector<std::int64_t> wd{1, 1};
  std::int64_t kvol = 1;
  for (int i = 0; i < spatial; ++i) {
    wd.push_back(k);
    kvol *= k;
  }
  std::vector<float> w(static_cast<std::size_t>(kvol));
  // Asymmetric weights so any misplaced tile offset shows up.
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = float(1 + i % 3) / float(2 * kvol);
  g.init("w", wd, w);
  std::string prev = "x";
  for (int l = 0; l < depth; ++l) {
    const std::string out = l + 1 == depth ? "z" : "h" + std::to_string(l);
    auto& n = g.node("Conv", {prev, "w"}, {out});
    GraphBuilder::set(n, "pads", std::vector<std::int64_t>(std::size_t(2 * spatial), k / 2));
    prev = out;
  }
  g.node("Sigmoid", {"z"}, {"y"});
  return g.bytes();
}

}  // namespace curvseg::testing
