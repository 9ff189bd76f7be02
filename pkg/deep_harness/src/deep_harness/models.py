"""The three benchmark architectures.

Inputs are windows of shape (T, F): T snapshots of F features (40 for the
level-based scheme, 2W+1 for the moving-window family).
"""

from __future__ import annotations

import torch
import torch.nn as nn


class LSTMClassifier(nn.Module):
    """One LSTM layer of 20 units, then a linear head."""

    def __init__(self, n_features: int, hidden: int = 20, classes: int = 3):
        super().__init__()
        self.lstm = nn.LSTM(n_features, hidden, batch_first=True)
        self.head = nn.Linear(hidden, classes)

    def forward(self, x):  # x: (B, T, F)
        out, _ = self.lstm(x)
        return self.head(out[:, -1])


class CausalConv1d(nn.Module):
    """Left-padded 1-d convolution over time."""

    def __init__(self, in_ch, out_ch, kernel, dilation):
        super().__init__()
        self.pad = (kernel - 1) * dilation
        self.conv = nn.Conv1d(in_ch, out_ch, kernel, dilation=dilation)

    def forward(self, x):  # x: (B, C, T)
        return self.conv(nn.functional.pad(x, (self.pad, 0)))


class TCNClassifier(nn.Module):
    """Three causal convolution layers, 32 channels each."""

    def __init__(self, n_features: int, channels: int = 32, kernel: int = 3,
                 classes: int = 3):
        super().__init__()
        layers = []
        in_ch = n_features
        for i in range(3):
            layers += [CausalConv1d(in_ch, channels, kernel, dilation=2 ** i), nn.ReLU()]
            in_ch = channels
        self.stack = nn.Sequential(*layers)
        self.head = nn.Linear(channels, classes)

    def forward(self, x):  # x: (B, T, F)
        out = self.stack(x.transpose(1, 2))
        return self.head(out[:, :, -1])


class _ConvBlock(nn.Module):
    def __init__(self, in_ch, out_ch, price_kernel, price_stride):
        super().__init__()
        self.stack = nn.Sequential(
            nn.Conv2d(in_ch, out_ch, (1, price_kernel), stride=(1, price_stride)),
            nn.LeakyReLU(0.01),
            nn.Conv2d(out_ch, out_ch, (4, 1), padding="same"),
            nn.LeakyReLU(0.01),
            nn.Conv2d(out_ch, out_ch, (4, 1), padding="same"),
            nn.LeakyReLU(0.01),
        )

    def forward(self, x):
        return self.stack(x)


class DeepLOB(nn.Module):
    """Convolution stack, inception module and an LSTM, for level-based
    inputs only: the price-axis convolutions assume the (price, volume)
    per-level column layout."""

    def __init__(self, n_features: int = 40, classes: int = 3):
        super().__init__()
        if n_features % 4 != 0:
            raise ValueError("DeepLOB expects 4 columns per book level")
        levels = n_features // 4
        self.block1 = _ConvBlock(1, 32, price_kernel=2, price_stride=2)   # pair price/volume
        self.block2 = _ConvBlock(32, 32, price_kernel=2, price_stride=2)  # pair sides
        self.block3 = nn.Sequential(
            nn.Conv2d(32, 32, (1, levels)),  # collapse the price axis
            nn.LeakyReLU(0.01),
            nn.Conv2d(32, 32, (4, 1), padding="same"),
            nn.LeakyReLU(0.01),
        )
        branch = lambda k: nn.Sequential(
            nn.Conv2d(32, 64, (1, 1)), nn.LeakyReLU(0.01),
            nn.Conv2d(64, 64, (k, 1), padding="same"), nn.LeakyReLU(0.01),
        )
        self.inception_a = branch(3)
        self.inception_b = branch(5)
        self.inception_pool = nn.Sequential(
            nn.MaxPool2d((3, 1), stride=1, padding=(1, 0)),
            nn.Conv2d(32, 64, (1, 1)), nn.LeakyReLU(0.01),
        )
        self.lstm = nn.LSTM(192, 64, batch_first=True)
        self.head = nn.Linear(64, classes)

    def forward(self, x):  # x: (B, T, F)
        z = x.unsqueeze(1)  # (B, 1, T, F)
        z = self.block3(self.block2(self.block1(z)))  # (B, 32, T, 1)
        z = torch.cat(
            [self.inception_a(z), self.inception_b(z), self.inception_pool(z)], dim=1
        )  # (B, 192, T, 1)
        z = z.squeeze(-1).transpose(1, 2)  # (B, T, 192)
        out, _ = self.lstm(z)
        return self.head(out[:, -1])


MODELS = {"lstm": LSTMClassifier, "tcn": TCNClassifier, "deeplob": DeepLOB}


def build_model(kind: str, n_features: int) -> nn.Module:
    if kind not in MODELS:
        raise ValueError(f"unknown model {kind!r}")
    return MODELS[kind](n_features)
