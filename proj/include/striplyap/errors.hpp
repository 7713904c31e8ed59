#pragma once

#include <stdexcept>
#include <string>

namespace striplyap {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A channel sits on |mu| = 2, where the free transfer matrix is not
/// diagonalizable into rotations.
class ParabolicChannel : public Error {
 public:
  ParabolicChannel(int channel, double mu)
      : Error("parabolic channel " + std::to_string(channel) + " (mu = " + std::to_string(mu) + ")"),
        channel_(channel),
        mu_(mu) {}
  int channel() const noexcept { return channel_; }
  double mu() const noexcept { return mu_; }

 private:
  int channel_;
  double mu_;
};

class NumericalDegeneracy : public Error {
 public:
  using Error::Error;
};

class HyperbolicPresent : public Error {
 public:
  using Error::Error;
};

class OutsideSpectrum : public Error {
 public:
  using Error::Error;
};

class MissingMoments : public Error {
 public:
  using Error::Error;
};

class InvalidCase : public Error {
 public:
  using Error::Error;
};

class RankCollapse : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace striplyap
