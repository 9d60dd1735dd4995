import json
from collections import OrderedDict

import pytest
import torch
from torch import nn

from camkit_adapter.cli import load_model, main

from conftest import write_gray_png

MODEL_SRC = '''
import torch
from torch import nn


class Net(nn.Module):
    def __init__(self):
        super().__init__()
        torch.manual_seed(5)
        self.conv1 = nn.Conv2d(3, 3, 3, padding=1)
        self.conv2 = nn.Conv2d(3, 4, 3, padding=1)
        self.head = nn.Linear(4, 2)

    def forward(self, x):
        x = torch.relu(self.conv1(x))
        x = torch.max_pool2d(x, 8)
        x = torch.relu(self.conv2(x))
        return self.head(x.mean(dim=(2, 3)))


def make():
    return Net()


READY = Net()
'''


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "models.py"
    path.write_text(MODEL_SRC)
    return path


@pytest.fixture
def image(tmp_path):
    return write_gray_png(tmp_path / "scan07.png", seed=9)


def test_load_model_forms(model_file):
    assert isinstance(load_model(f"{model_file}:make"), nn.Module)
    assert isinstance(load_model(f"{model_file}:READY"), nn.Module)
    assert isinstance(load_model("torch.nn:Identity"), nn.Module)


def test_load_model_errors(model_file, tmp_path):
    from camkit_adapter import AdapterError

    with pytest.raises(AdapterError, match="not found"):
        load_model(f"{model_file}:missing")
    constant = tmp_path / "value.py"
    constant.write_text("THING = 7\n")
    with pytest.raises(AdapterError, match="not a module or factory"):
        load_model(f"{constant}:THING")


def test_load_saved_module(tmp_path, image):
    torch.manual_seed(8)
    net = nn.Sequential(OrderedDict([
        ("conv1", nn.Conv2d(3, 2, 3, padding=1)),
        ("relu", nn.ReLU()),
        ("pool", nn.AdaptiveAvgPool2d(1)),
        ("flatten", nn.Flatten()),
        ("head", nn.Linear(2, 2)),
    ]))
    saved = tmp_path / "net.pt"
    torch.save(net, saved)
    code = main(["bundle", "--model", str(saved), "--image", str(image),
                 "--kind", "conv", "--out-dir", str(tmp_path / "out")])
    assert code == 0
    assert (tmp_path / "out" / "scan07.json").exists()


def test_bundle_subcommand(tmp_path, model_file, image, capsys):
    out_dir = tmp_path / "export"
    code = main(["bundle", "--model", f"{model_file}:make", "--image", str(image),
                 "--kind", "conv", "--class-index", "1",
                 "--model-name", "tiny", "--out-dir", str(out_dir)])
    assert code == 0
    assert str(out_dir / "scan07.json") in capsys.readouterr().out
    manifest = json.loads((out_dir / "scan07.json").read_text())
    assert manifest["model_name"] == "tiny"
    assert manifest["class_index"] == 1
    assert (out_dir / "scan07_acts.camt").exists()
    assert (out_dir / "scan07_grads.camt").exists()


def test_bundle_explicit_layer(tmp_path, model_file, image):
    code = main(["bundle", "--model", f"{model_file}:make", "--image", str(image),
                 "--kind", "conv", "--layer", "conv1",
                 "--out-dir", str(tmp_path / "out")])
    assert code == 0


def test_bundle_errors(tmp_path, model_file, image):
    args = ["bundle", "--model", f"{model_file}:make", "--kind", "conv",
            "--out-dir", str(tmp_path / "out")]
    assert main(args + ["--image", str(image), "--layer", "nope"]) == 1
    assert main(args + ["--image", str(tmp_path / "absent.png")]) == 2
    assert main(["bundle", "--model", f"{model_file}:make", "--image", str(image),
                 "--kind", "dense", "--out-dir", str(tmp_path / "o")]) == 1
    assert main([]) == 1
    assert main(["bundle"]) == 1


def test_preprocess_flags(tmp_path, model_file, image):
    code = main(["bundle", "--model", f"{model_file}:make", "--image", str(image),
                 "--kind", "conv", "--out-dir", str(tmp_path / "out"),
                 "--size", "64x64", "--mean", "0.5,0.5,0.5", "--std", "0.2,0.2,0.2"])
    assert code == 0
    assert main(["bundle", "--model", f"{model_file}:make", "--image", str(image),
                 "--kind", "conv", "--out-dir", str(tmp_path / "o"),
                 "--mean", "0.5,0.5"]) == 1


def test_predictions_subcommand(tmp_path, model_file, capsys):
    for i in range(3):
        write_gray_png(tmp_path / f"img{i}.png", seed=40 + i)
    manifest = tmp_path / "data.csv"
    manifest.write_text(
        "image_path,patient_id,label\n"
        "img0.png,person1,0\n"
        "img1.png,person2,1\n"
        "img2.png,person3,1\n")
    out = tmp_path / "pred.csv"
    code = main(["predictions", "--model", f"{model_file}:make",
                 "--manifest", str(manifest), "--out", str(out)])
    assert code == 0
    assert "wrote 3 predictions" in capsys.readouterr().out
    assert out.read_text().splitlines()[0] == "id,patient_id,label,score"


def test_predictions_skip_exits_nonzero(tmp_path, model_file, capsys):
    write_gray_png(tmp_path / "img0.png", seed=50)
    manifest = tmp_path / "data.csv"
    manifest.write_text(
        "image_path,patient_id,label\n"
        "img0.png,person1,0\n"
        "gone.png,person2,1\n")
    out = tmp_path / "pred.csv"
    code = main(["predictions", "--model", f"{model_file}:make",
                 "--manifest", str(manifest), "--out", str(out)])
    assert code == 1
    captured = capsys.readouterr()
    assert "(1 skipped)" in captured.out
    assert "gone.png" in captured.err
    assert len(out.read_text().splitlines()) == 2  # header + the readable row


def test_predictions_missing_manifest(tmp_path, model_file):
    assert main(["predictions", "--model", f"{model_file}:make",
                 "--manifest", str(tmp_path / "none.csv"),
                 "--out", str(tmp_path / "o.csv")]) == 2
