/*
 Copyright 2026 The CKNet Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "cknet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "cknet/errors.hpp"

namespace cknet {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
    const std::vector<char>& bytes() const { return buf_; }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    Reader(std::vector<char> data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint32_t u32() {
        const char* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const char* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    const char* take(std::size_t n) {
        if (n > data_.size() - pos_) throw IoError(path_ + ": truncated checkpoint");
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::size_t remaining() const { return data_.size() - pos_; }
    // Bounds a declared element count by the bytes left.
    std::size_t count(std::uint64_t n, std::size_t element_bytes) {
        if (n > remaining() / element_bytes) throw IoError(path_ + ": payload length does not match the file");
        return static_cast<std::size_t>(n);
    }

private:
    std::vector<char> data_;
    std::string path_;
    std::size_t pos_ = 0;
};

void write_layers(Writer& w, const Network& net) {
    w.u32(static_cast<std::uint32_t>(net.layers().size()));
    for (const auto& l : net.layers()) {
        w.u32(static_cast<std::uint32_t>(l.kind));
        for (int v : {l.in, l.out, l.kernel, l.stride, l.padding, l.target.c, l.target.h, l.target.w}) {
            w.u32(static_cast<std::uint32_t>(v));
        }
    }
}

std::vector<LayerSpec> read_layers(Reader& r) {
    const std::size_t n = r.count(r.u32(), 36);
    std::vector<LayerSpec> layers(n);
    for (auto& l : layers) {
        const std::uint32_t kind = r.u32();
        if (kind > static_cast<std::uint32_t>(LayerKind::reshape)) throw IoError("unknown layer kind in checkpoint");
        l.kind = static_cast<LayerKind>(kind);
        l.in = static_cast<int>(r.u32());
        l.out = static_cast<int>(r.u32());
        l.kernel = static_cast<int>(r.u32());
        l.stride = static_cast<int>(r.u32());
        l.padding = static_cast<int>(r.u32());
        l.target.c = static_cast<int>(r.u32());
        l.target.h = static_cast<int>(r.u32());
        l.target.w = static_cast<int>(r.u32());
    }
    return layers;
}

void write_vector(Writer& w, const VectorXd& v) {
    w.u64(static_cast<std::uint64_t>(v.size()));
    for (Index i = 0; i < v.size(); ++i) w.f64(v[i]);
}

VectorXd read_vector(Reader& r) {
    const std::size_t n = r.count(r.u64(), 8);
    VectorXd v(static_cast<Index>(n));
    for (Index i = 0; i < v.size(); ++i) v[i] = r.f64();
    return v;
}

void write_row_major(Writer& w, const MatrixXd& m) {
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
}

MatrixXd read_row_major(Reader& r, Index rows, Index cols) {
    r.count(static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols), 8);
    MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = r.f64();
    return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const KoopmanModel& model, const TrainState* training) {
    model.validate();
    Writer w;
    w.raw(kCheckpointMagic, 4);
    w.u8(static_cast<std::uint8_t>(model.mode));
    const Shape3 in = model.encoder.input_shape();
    const Shape3 out = model.decoder.output_shape();
    for (int v : {model.latent_dim(), model.action_dim(), in.c, out.c, in.h, in.w}) w.u32(static_cast<std::uint32_t>(v));
    w.f64(model.dt);
    write_layers(w, model.encoder);
    write_layers(w, model.decoder);
    write_vector(w, model.encoder.parameters());
    write_vector(w, model.decoder.parameters());
    write_row_major(w, model.A);
    write_row_major(w, model.B);
    if (training != nullptr) {
        w.u8(1);
        w.u64(static_cast<std::uint64_t>(training->epoch));
        w.u64(static_cast<std::uint64_t>(training->adam.t));
        w.u64(static_cast<std::uint64_t>(training->adam.m.size()));
        for (Index i = 0; i < training->adam.m.size(); ++i) w.f64(training->adam.m[i]);
        for (Index i = 0; i < training->adam.v.size(); ++i) w.f64(training->adam.v[i]);
    } else {
        w.u8(0);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write checkpoint " + path);
    f.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!f) throw IoError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read checkpoint " + path);
    std::vector<char> data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r(std::move(data), path);
    if (std::memcmp(r.take(4), kCheckpointMagic, 4) != 0) throw IoError(path + ": not a CKN1 checkpoint");
    const std::uint8_t mode = r.u8();
    if (mode > 1) throw IoError(path + ": unknown latent mode flag");
    std::uint32_t dims[6];
    for (auto& d : dims) d = r.u32();
    const auto [latent, actions, c, c_out, h, w] = dims;
    if (latent == 0 || actions == 0 || c == 0 || c_out == 0 || h == 0 || w == 0) {
        throw IoError(path + ": zero dimension in header");
    }
    Checkpoint ck;
    KoopmanModel& m = ck.model;
    m.mode = static_cast<LatentMode>(mode);
    m.dt = r.f64();
    try {
        auto enc_layers = read_layers(r);
        auto dec_layers = read_layers(r);
        m.encoder = Network(Shape3{static_cast<int>(c), static_cast<int>(h), static_cast<int>(w)}, std::move(enc_layers));
        const Index head = m.mode == LatentMode::variational ? 2 * latent : latent;
        if (m.encoder.output_shape().size() != head) throw IoError(path + ": encoder head does not match latent_dim");
        m.decoder = Network(Shape3{static_cast<int>(latent), 1, 1}, std::move(dec_layers));
        if (m.decoder.output_shape().c != static_cast<int>(c_out)) {
            throw IoError(path + ": decoder output does not match c_out");
        }
        VectorXd pe = read_vector(r);
        VectorXd pd = read_vector(r);
        if (pe.size() != m.encoder.parameter_count() || pd.size() != m.decoder.parameter_count()) {
            throw IoError(path + ": payload length does not match the layer table");
        }
        m.encoder.set_parameters(pe);
        m.decoder.set_parameters(pd);
    } catch (const ShapeError& e) {
        throw IoError(path + ": inconsistent layer table: " + e.what());
    } catch (const ConfigError& e) {
        throw IoError(path + ": inconsistent layer table: " + e.what());
    }
    m.A = read_row_major(r, latent, latent);
    m.B = read_row_major(r, latent, actions);
    const std::uint8_t has_state = r.u8();
    if (has_state == 1) {
        TrainState s;
        s.epoch = static_cast<int>(r.u64());
        s.adam.t = static_cast<std::int64_t>(r.u64());
        const std::size_t n = r.count(r.u64(), 16);
        if (n != 0 && static_cast<Index>(n) != m.parameter_count()) {
            throw IoError(path + ": optimizer state does not match the model");
        }
        s.adam.m.resize(static_cast<Index>(n));
        s.adam.v.resize(static_cast<Index>(n));
        for (std::size_t i = 0; i < n; ++i) s.adam.m[static_cast<Index>(i)] = r.f64();
        for (std::size_t i = 0; i < n; ++i) s.adam.v[static_cast<Index>(i)] = r.f64();
        ck.training = std::move(s);
    } else if (has_state != 0) {
        throw IoError(path + ": bad optimizer flag");
    }
    if (r.remaining() != 0) throw IoError(path + ": trailing bytes after payload");
    m.validate();
    if (ck.training) ck.training->model = m;
    return ck;
}

KoopmanModel linear_model(const MatrixXd& A, const MatrixXd& B, double dt) {
    KoopmanModel m;
    const int v = static_cast<int>(A.rows());
    m.encoder = Network(Shape3{v, 1, 1}, {});
    m.decoder = Network(Shape3{v, 1, 1}, {});
    m.A = A;
    m.B = B;
    m.dt = dt;
    m.validate();
    return m;
}

}  // namespace cknet
