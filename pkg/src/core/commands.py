"""
子命令实现

每个函数接收解析后的参数与原始 argv，返回进程退出码:
0 成功；3 运行完成但未通过（未认证）。运行期错误由 main 统一转换为退出码 1。
"""

import argparse
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.attacks import attack_dataset, attack_domains, save_attack_records
from src.certify import SafetyDomain, domain_bounds, load_domains, save_domain_generator, save_domains
from src.config.settings import settings
from src.core import reporting
from src.core.manifest import ManifestRecorder
from src.errorlab import analyze, save_histogram_csv, save_report
from src.followsim import (
    NUM_CLASSES,
    NUM_RAYS,
    MotionClass,
    evaluate_scenarios,
    gen_dataset,
    gen_domains,
    load_scenario,
    oracle_controller,
    save_trajectory_csv,
    standard_scenarios,
)
from src.followsim.scenario import Controller
from src.models.attack_models import AttackConfig
from src.models.error_models import ErrorAnalysisConfig
from src.models.scenario_models import Scenario, ScenarioResult, WorldSamplerConfig
from src.models.train_models import TrainConfig, TrainReport
from src.sdtrain import confusion_matrix, save_trace_csv, train
from src.tensorcore import Dataset, Network, follow_network, load_dataset, load_model, mlp, save_dataset, save_model
from src.utils.exceptions import DomainError, ShapeError
from src.utils.helpers import derive_seed, ensure_directory, load_json_file, save_json_file, write_text_atomic
from src.utils.logger import log

EXIT_OK = 0
EXIT_NOT_CERTIFIED = 3

TRAIN_FILE = "train.sdt"
VAL_FILE = "val.sdt"


def _stem(path: Union[str, Path]) -> Path:
    """去掉 .json 后缀的输出前缀"""
    p = Path(path)
    return p.with_suffix("") if p.suffix == ".json" else p


def _default_output(name: str) -> Path:
    return Path(settings.OUTPUT_DIR) / name


def _print(text: str) -> None:
    print(text, flush=True)


def _resolve_domains(args: argparse.Namespace, input_dim: int, recorder: ManifestRecorder) -> List[SafetyDomain]:
    """--level 生成分级安全域，--domains 读取文件，两者都未给出时为空列表"""
    level: Optional[int] = getattr(args, "level", None)
    path: Optional[str] = getattr(args, "domains", None)
    if level is not None:
        if input_dim != NUM_RAYS:
            raise ShapeError(f"安全等级只适用于 {NUM_RAYS} 维输入，网络输入维度为 {input_dim}")
        return gen_domains(level)
    if path:
        recorder.add_input("domains", path)
        return load_domains(path, input_dim)
    return []


def _class_names(num_classes: int) -> Optional[List[str]]:
    return [m.label for m in MotionClass] if num_classes == NUM_CLASSES else None


def _initial_network(dataset: Dataset, seed: int) -> Network:
    init_seed = derive_seed(seed, "init")
    if dataset.input_dim == NUM_RAYS and dataset.num_classes == NUM_CLASSES:
        return follow_network(init_seed)
    return mlp([dataset.input_dim, 64, 32, dataset.num_classes], init_seed)


def cmd_gen_data(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """生成跟随任务训练集与验证集"""
    out = ensure_directory(args.out)
    sampler = WorldSamplerConfig(noise_std=args.noise)
    recorder = ManifestRecorder("gen-data", list(argv), args.seed, {
        "n_train": args.train, "n_val": args.val, "sampler": sampler.model_dump(),
    })
    log.info(f"输入: seed={args.seed}, 训练 {args.train} 个, 验证 {args.val} 个, 输出目录 {out}")

    log.info("步骤1: 采样场景并渲染扫描")
    train_ds, val_ds = gen_dataset(args.seed, args.train, args.val, sampler)

    log.info("步骤2: 写出数据集文件")
    for name, ds in ((TRAIN_FILE, train_ds), (VAL_FILE, val_ds)):
        save_dataset(ds, out / name)
        recorder.add_output(name, out / name)

    hist = {MotionClass(c).label: n for c, n in enumerate(train_ds.label_histogram())}
    _print(reporting.render(
        pd.DataFrame(list(hist.items()), columns=["类别", "训练样本数"]), "训练集类别分布"
    ))
    recorder.finish(EXIT_OK, out)
    log.info(f"输出: {out / TRAIN_FILE} ({len(train_ds)} 个), {out / VAL_FILE} ({len(val_ds)} 个)")
    return EXIT_OK


def cmd_gen_domains(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """写出某一安全等级的安全域文件"""
    out = Path(args.out)
    recorder = ManifestRecorder("gen-domains", list(argv), 0, {"level": args.level, "explicit": args.explicit})
    log.info(f"输入: 安全等级 {args.level}, 显式列表={args.explicit}")
    if args.explicit:
        domains = gen_domains(args.level)
        save_domains(domains, NUM_RAYS, out)
        count = len(domains)
    else:
        save_domain_generator(args.level, NUM_RAYS, out)
        count = len(gen_domains(args.level))
    recorder.add_output("domains", out)
    recorder.finish(EXIT_OK, out)
    log.info(f"输出: {out} ({count} 个安全域)")
    return EXIT_OK


def cmd_train(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """安全域训练；写出模型、训练轨迹与训练报告"""
    data_dir = Path(args.data)
    if not data_dir.is_dir():
        raise FileNotFoundError(f"数据目录不存在: {data_dir}")
    cfg = TrainConfig.model_validate(load_json_file(args.config)) if args.config else TrainConfig()
    if args.seed is not None:
        cfg = cfg.model_copy(update={"seed": args.seed})
    if args.max_epochs is not None:
        cfg = TrainConfig.model_validate({
            **cfg.model_dump(by_alias=True),
            "max_epochs": args.max_epochs,
            "min_epochs": min(cfg.min_epochs, args.max_epochs),
        })
    recorder = ManifestRecorder("train", list(argv), cfg.seed, {
        "train": cfg.model_dump(by_alias=True), "level": args.level, "init": args.init,
    })
    log.info(f"输入: 数据 {data_dir}, 配置 {args.config or '默认'}, 种子 {cfg.seed}")

    log.info("步骤1: 读取数据与安全域")
    train_ds = load_dataset(data_dir / TRAIN_FILE)
    recorder.add_input("train", data_dir / TRAIN_FILE)
    val_path = data_dir / VAL_FILE
    val_ds = load_dataset(val_path) if val_path.exists() else None
    if val_ds is not None:
        recorder.add_input("val", val_path)
    if args.init:
        net = load_model(args.init)
        recorder.add_input("init", args.init)
    else:
        net = _initial_network(train_ds, cfg.seed)
    domains = _resolve_domains(args, net.input_dim, recorder)

    log.info(f"步骤2: 训练 ({len(train_ds)} 个样本, {len(domains)} 个安全域)")
    net, report = train(net, train_ds, domains, cfg, val_ds)

    log.info("步骤3: 写出模型与报告")
    stem = _stem(args.out)
    model_path = stem.with_name(stem.name + ".json")
    trace_path = stem.with_name(stem.name + ".trace.csv")
    report_path = stem.with_name(stem.name + ".report.json")
    save_model(net, model_path)
    save_trace_csv(report, trace_path)
    write_text_atomic(report.model_dump_json(indent=2), report_path)
    for name, path in (("model", model_path), ("trace", trace_path), ("report", report_path)):
        recorder.add_output(name, path)

    _print(reporting.render(reporting.train_summary(report), "训练结果"))
    _print(reporting.render(
        reporting.confusion_frame(confusion_matrix(net, train_ds), _class_names(train_ds.num_classes)), "训练集混淆矩阵"
    ))
    recorder.finish(EXIT_OK, model_path)
    log.info(f"输出: 模型 {model_path}, 收敛={report.converged}, safety_bound={report.final_safety_bound:.4f}")
    return EXIT_OK


def cmd_certify(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """逐域计算认证界；全部 ≤ δ 时退出码为 0，否则为 3"""
    net = load_model(args.model)
    recorder = ManifestRecorder("certify", list(argv), 0, {"delta": args.delta, "level": args.level})
    recorder.add_input("model", args.model)
    domains = _resolve_domains(args, net.input_dim, recorder)
    log.info(f"输入: 模型 {args.model}, {len(domains)} 个安全域, δ={args.delta}")

    bounds = domain_bounds(net, domains) if domains else np.zeros(0)
    certified = bounds <= args.delta
    report = {
        "num_domains": len(domains),
        "delta": args.delta,
        "safety_bound": float(bounds.max()) if bounds.size else 0.0,
        "num_certified": int(certified.sum()),
        "all_certified": bool(certified.all()),
        "bounds": bounds.tolist(),
    }
    out = Path(args.out) if args.out else _default_output("certify.json")
    save_json_file(report, out)
    recorder.add_output("report", out)

    if domains:
        _print(reporting.render(reporting.certify_summary(bounds, args.delta), "认证界最大的安全域"))
    _print(f"已认证 {report['num_certified']}/{len(domains)}，safety_bound={report['safety_bound']:.4f}")
    code = EXIT_OK if report["all_certified"] else EXIT_NOT_CERTIFIED
    recorder.finish(code, out)
    log.info(f"输出: {out}, 全部认证={report['all_certified']}")
    return code


def cmd_attack(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """对数据集做 FGSM/PGD，或在安全域内做 PGD"""
    net = load_model(args.model)
    cfg = AttackConfig(
        epsilon=args.eps,
        steps=args.steps,
        step_size=args.step_size,
        random_init=not args.no_random_init,
        clamp=tuple(args.clamp) if args.clamp else None,
        seed=args.seed,
    )
    recorder = ManifestRecorder("attack", list(argv), args.seed, {
        "attack": cfg.model_dump(), "method": args.method, "level": args.level,
    })
    recorder.add_input("model", args.model)
    if args.data:
        dataset = load_dataset(args.data)
        recorder.add_input("data", args.data)
        log.info(f"输入: {len(dataset)} 个样本, 方法 {args.method}, ε={cfg.epsilon}")
        records = attack_dataset(net, dataset, cfg, args.method)
        target = "样本"
    else:
        domains = _resolve_domains(args, net.input_dim, recorder)
        if not domains:
            raise DomainError("需要 --data、--domains 或 --level ≥ 1 之一作为攻击目标")
        log.info(f"输入: {len(domains)} 个安全域, PGD {cfg.steps} 步")
        records = attack_domains(net, domains, cfg)
        target = "安全域"

    out = Path(args.out) if args.out else _default_output("attack.json")
    records_path = out.with_name(_stem(out).name + ".records.jsonl")
    successes = [r.sample_index for r in records if r.success]
    save_json_file({
        "target": "data" if args.data else "domains",
        "method": args.method if args.data else "pgd",
        "num_attacks": len(records),
        "num_success": len(successes),
        "success_indices": successes,
        "config": cfg.model_dump(),
    }, out)
    save_attack_records(records, records_path)
    recorder.add_output("report", out)
    recorder.add_output("records", records_path)

    _print(reporting.render(reporting.attack_summary(records), f"攻击结果（{target}）"))
    recorder.finish(EXIT_OK, out)
    log.info(f"输出: {out}, 成功 {len(successes)}/{len(records)}")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """误差剖面分析"""
    net = load_model(args.model)
    cfg = ErrorAnalysisConfig(
        eta=args.eta,
        epsilon=args.epsilon,
        norm=args.norm,
        locality_K=args.K,
        min_neighbors=args.min_neighbors,
        loss_kind=args.loss_kind,
        histogram_bins=args.bins,
    )
    recorder = ManifestRecorder("analyze", list(argv), 0, {"analysis": cfg.model_dump(), "level": args.level})
    recorder.add_input("model", args.model)
    baseline = None
    if args.baseline:
        baseline = load_model(args.baseline)
        recorder.add_input("baseline", args.baseline)
    dataset = load_dataset(args.data)
    recorder.add_input("data", args.data)
    domains = _resolve_domains(args, net.input_dim, recorder)
    training_loss = delta = None
    if args.train_report:
        train_report = TrainReport.model_validate(load_json_file(args.train_report))
        training_loss, delta = train_report.total_training_loss, train_report.delta
        recorder.add_input("train_report", args.train_report)
    log.info(f"输入: {len(dataset)} 个样本, {len(domains)} 个安全域, η={cfg.eta}, ε={cfg.epsilon}")

    report = analyze(net, dataset, domains, cfg, baseline, training_loss=training_loss, delta=delta)
    out = Path(args.out) if args.out else _default_output("analyze.json")
    save_report(report, out)
    recorder.add_output("report", out)
    if report.boundary_stats is not None and report.boundary_stats.n_new_errors:
        hist_path = out.with_name(_stem(out).name + ".histogram.csv")
        save_histogram_csv(report.boundary_stats, hist_path)
        recorder.add_output("histogram", hist_path)

    _print(reporting.render(reporting.error_summary(report), "误差剖面"))
    recorder.finish(EXIT_OK, out)
    log.info(f"输出: {out}")
    return EXIT_OK


def _policies(args: argparse.Namespace, recorder: ManifestRecorder) -> Dict[str, Union[Network, Controller]]:
    policies: Dict[str, Union[Network, Controller]] = {}
    if args.oracle:
        policies["oracle"] = oracle_controller
    for path in args.model or []:
        name = Path(path).stem
        if name in policies:
            name = f"{name}#{len(policies)}"
        policies[name] = load_model(path)
        recorder.add_input(f"model:{name}", path)
    return policies


async def cmd_eval_scenarios(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """闭环场景评估；多个模型时输出成功表与失败嵌套检查"""
    recorder = ManifestRecorder("eval-scenarios", list(argv), args.seed, {
        "dt": args.dt, "noise": args.noise, "standard": args.standard, "oracle": args.oracle,
    })
    scenarios: List[Scenario] = []
    if args.standard or not args.scenario:
        scenarios.extend(standard_scenarios())
    for path in args.scenario or []:
        scenarios.append(load_scenario(path))
        recorder.add_input(f"scenario:{Path(path).stem}", path)
    policies = _policies(args, recorder)
    log.info(f"输入: {len(scenarios)} 个场景, 控制器 {list(policies)}")

    out = ensure_directory(args.out)
    columns: Dict[str, List[ScenarioResult]] = {}
    for step, (name, policy) in enumerate(policies.items(), start=1):
        log.info(f"步骤{step}: 评估 {name}")
        columns[name] = await evaluate_scenarios(
            policy, scenarios, args.dt, desc=f"场景评估 {name}", noise_std=args.noise, seed=args.seed
        )
        for scenario, result in zip(scenarios, columns[name]):
            stem = out / name / f"{scenario.id:02d}_{scenario.name}"
            save_trajectory_csv(result, stem.with_suffix(".csv"))
            if args.plot:
                from src.followsim.plotting import plot_trajectory

                plot_trajectory(result, scenario, stem.with_suffix(".png"))

    violations = reporting.nesting_violations(columns)
    results_path = out / "results.json"
    save_json_file({
        "scenarios": [s.name for s in scenarios],
        "results": {
            name: [r.model_dump(exclude={"trajectory"}) for r in results] for name, results in columns.items()
        },
        "totals": {name: sum(r.success for r in results) for name, results in columns.items()},
        "nesting_violations": [list(v) for v in violations],
    }, results_path)
    recorder.add_output("results", results_path)

    _print(reporting.render(reporting.scenario_grid(columns), "场景评估"))
    for name, results in columns.items():
        failures = reporting.failure_frame(results)
        if len(failures):
            _print(reporting.render(failures, f"{name} 失败详情"))
    if len(columns) > 1:
        if violations:
            lines = [f"  {scenario}: {a} 失败但 {b} 成功" for scenario, a, b in violations]
            _print("失败嵌套不成立:\n" + "\n".join(lines))
        else:
            _print("失败嵌套成立")
    recorder.finish(EXIT_OK, out)
    log.info(f"输出: {results_path}")
    return EXIT_OK


def cmd_plot_domain(args: argparse.Namespace, argv: Sequence[str]) -> int:
    """绘制一个安全域；给出模型时叠加盒中心扫描与 PGD 攻击后的扫描"""
    from src.attacks import pgd_in_box
    from src.followsim.plotting import plot_safety_domain

    recorder = ManifestRecorder("plot-domain", list(argv), args.seed, {"level": args.level, "index": args.index})
    net = None
    if args.model:
        net = load_model(args.model)
        recorder.add_input("model", args.model)
    domains = _resolve_domains(args, net.input_dim if net is not None else NUM_RAYS, recorder)
    if not 0 <= args.index < len(domains):
        raise DomainError(f"安全域序号 {args.index} 超出范围 [0, {len(domains)})")
    domain = domains[args.index]
    log.info(f"输入: 安全域 {args.index} / {len(domains)}")

    scan = attacked = None
    scan_label = attacked_label = None
    names = _class_names(net.output_dim) if net is not None else None
    if net is not None:
        cfg = AttackConfig(steps=args.steps, seed=args.seed)
        scan = domain.box.center.astype(net.dtype)
        attacked, loss = pgd_in_box(net, domain.box, domain.acceptable, cfg)
        labels = net.predict(np.stack([scan, attacked]))
        scan_label, attacked_label = [names[int(c)] if names else str(int(c)) for c in labels]
        log.info(f"PGD 最坏规范损失 {loss:.4f}, 中心类别 {scan_label}, 攻击后类别 {attacked_label}")

    out = Path(args.out) if args.out else _default_output(f"domain_{args.index}.png")
    plot_safety_domain(
        domain, out, scan, attacked,
        scan_label=f"中心: {scan_label}" if scan_label else None,
        attacked_label=f"攻击后: {attacked_label}" if attacked_label else None,
        title=f"安全域 {args.index}",
    )
    recorder.add_output("figure", out)
    recorder.finish(EXIT_OK, out)
    log.info(f"输出: {out}")
    return EXIT_OK

