"""
安全域训练工具主入口

子命令: gen-data, gen-domains, train, certify, attack, analyze, eval-scenarios, plot-domain
退出码: 0 成功; 1 运行错误; 2 参数错误; 3 运行完成但未通过认证
"""

import argparse
import asyncio
import inspect
import sys
from pathlib import Path
from typing import List, Optional

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.config.settings import settings  # noqa: E402
from src.core import (  # noqa: E402
    cmd_analyze,
    cmd_attack,
    cmd_certify,
    cmd_eval_scenarios,
    cmd_gen_data,
    cmd_gen_domains,
    cmd_plot_domain,
    cmd_train,
)
from src.followsim import DEFAULT_TRAIN, DEFAULT_VAL  # noqa: E402
from src.utils.helpers import Timer  # noqa: E402
from src.utils.logger import log  # noqa: E402

EXIT_RUNTIME_ERROR = 1


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"必须是正整数: {text}")
    return value


def _add_domain_source(parser: argparse.ArgumentParser, required: bool = False) -> None:
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument('--domains', type=str, help='安全域文件 (JSON)')
    group.add_argument('--level', type=int, choices=range(4), help='跟随任务安全等级 0-3')


def build_parser() -> argparse.ArgumentParser:
    """构建命令行解析器"""
    parser = argparse.ArgumentParser(
        prog="sdtrain",
        description="安全域训练 - 以区间界传播认证的安全规范训练、攻击与误差分析",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
使用示例:
  python main.py gen-data --seed 1 --out data/
  python main.py train --data data/ --level 1 --out models/l1
  python main.py certify --model models/l1.json --level 1 --delta 0.1
  python main.py attack --model models/l0.json --level 1 --steps 50
  python main.py eval-scenarios --standard --model models/l0.json models/l1.json
        """
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="生成跟随任务训练/验证数据集")
    p.add_argument('--seed', type=int, default=settings.DEFAULT_SEED, help='随机种子')
    p.add_argument('--train', type=positive_int, default=DEFAULT_TRAIN, help=f'训练样本数 (默认: {DEFAULT_TRAIN})')
    p.add_argument('--val', type=positive_int, default=DEFAULT_VAL, help=f'验证样本数 (默认: {DEFAULT_VAL})')
    p.add_argument('--noise', type=float, default=0.0, help='测距高斯噪声标准差 (默认: 0)')
    p.add_argument('--out', type=str, required=True, help='输出目录')
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("gen-domains", help="写出安全等级对应的安全域文件")
    p.add_argument('--level', type=int, choices=range(4), required=True, help='安全等级 0-3')
    p.add_argument('--explicit', action='store_true', help='写出显式盒子列表而非生成器片段')
    p.add_argument('--out', type=str, required=True, help='输出文件')
    p.set_defaults(handler=cmd_gen_domains)

    p = sub.add_parser("train", help="安全域训练")
    p.add_argument('--config', type=str, default=None, help='TrainConfig JSON 文件')
    p.add_argument('--data', type=str, required=True, help='包含 train.sdt / val.sdt 的数据目录')
    _add_domain_source(p)
    p.add_argument('--init', type=str, default=None, help='初始模型 (默认: 按种子随机初始化)')
    p.add_argument('--seed', type=int, default=None, help='覆盖配置中的种子')
    p.add_argument('--max-epochs', type=positive_int, default=None, help='覆盖配置中的最大轮数')
    p.add_argument('--out', type=str, required=True, help='输出前缀，写出 <out>.json / .trace.csv / .report.json')
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("certify", help="认证模型在安全域上的最坏规范损失")
    p.add_argument('--model', type=str, required=True, help='模型文件')
    _add_domain_source(p, required=True)
    p.add_argument('--delta', type=float, default=0.1, help='安全阈值 δ (默认: 0.1)')
    p.add_argument('--out', type=str, default=None, help='报告文件 (默认: OUTPUT_DIR/certify.json)')
    p.set_defaults(handler=cmd_certify)

    p = sub.add_parser("attack", help="FGSM/PGD 攻击数据集或安全域")
    p.add_argument('--model', type=str, required=True, help='模型文件')
    p.add_argument('--data', type=str, default=None, help='数据集文件 (.sdt)，给出时攻击 ε 球')
    _add_domain_source(p)
    p.add_argument('--method', choices=['fgsm', 'pgd'], default='pgd', help='数据集攻击方法 (安全域固定为 PGD)')
    p.add_argument('--eps', type=float, default=0.0, help='ε 球半径 (默认: 0)')
    p.add_argument('--steps', type=positive_int, default=20, help='PGD 步数 (默认: 20)')
    p.add_argument('--step-size', type=float, default=None, help='PGD 步长 (默认: 2.5×半宽/步数)')
    p.add_argument('--no-random-init', action='store_true', help='从中心而非随机点开始')
    p.add_argument('--clamp', type=float, nargs=2, metavar=('LO', 'HI'), default=None, help='输入合法范围')
    p.add_argument('--seed', type=int, default=settings.DEFAULT_SEED, help='随机种子')
    p.add_argument('--out', type=str, default=None, help='报告文件 (默认: OUTPUT_DIR/attack.json)')
    p.set_defaults(handler=cmd_attack)

    p = sub.add_parser("analyze", help="误差剖面分析")
    p.add_argument('--model', type=str, required=True, help='待分析模型')
    p.add_argument('--baseline', type=str, default=None, help='经验风险最小化对照模型')
    p.add_argument('--data', type=str, required=True, help='数据集文件 (.sdt)')
    _add_domain_source(p)
    p.add_argument('--eta', type=float, required=True, help='损失阈值 η')
    p.add_argument('--epsilon', type=float, required=True, help='邻域半径 ε')
    p.add_argument('--K', type=float, default=1.0, help='局部性常数 K (默认: 1.0)')
    p.add_argument('--norm', choices=['l_inf', 'l2'], default='l_inf', help='距离范数')
    p.add_argument('--min-neighbors', type=positive_int, default=1, help='瞬态误差所需最少邻居数')
    p.add_argument('--loss-kind', choices=['cross_entropy', 'zero_one'], default='cross_entropy')
    p.add_argument('--bins', type=positive_int, default=10, help='距离直方图分箱数')
    p.add_argument('--train-report', type=str, default=None, help='训练报告，提供总训练损失与 δ')
    p.add_argument('--out', type=str, default=None, help='报告文件 (默认: OUTPUT_DIR/analyze.json)')
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("eval-scenarios", help="闭环场景评估")
    p.add_argument('--model', type=str, nargs='+', default=None, help='一个或多个模型，按列输出')
    p.add_argument('--oracle', action='store_true', help='同时评估真值控制器')
    p.add_argument('--standard', action='store_true', help='评估七个标准场景 (未给 --scenario 时默认)')
    p.add_argument('--scenario', type=str, action='append', default=None, help='场景文件，可重复')
    p.add_argument('--dt', type=float, default=0.1, help='时间步长 (默认: 0.1)')
    p.add_argument('--noise', type=float, default=0.0, help='测距高斯噪声标准差')
    p.add_argument('--seed', type=int, default=settings.DEFAULT_SEED, help='噪声随机种子')
    p.add_argument('--plot', action='store_true', help='为每次运行绘制轨迹图')
    p.add_argument('--out', type=str, default=str(Path(settings.OUTPUT_DIR) / "scenarios"), help='输出目录')
    p.set_defaults(handler=cmd_eval_scenarios)

    p = sub.add_parser("plot-domain", help="绘制安全域，可叠加 PGD 攻击结果")
    _add_domain_source(p, required=True)
    p.add_argument('--index', type=int, default=0, help='安全域序号')
    p.add_argument('--model', type=str, default=None, help='给出时叠加盒中心与攻击后的扫描')
    p.add_argument('--steps', type=positive_int, default=50, help='PGD 步数')
    p.add_argument('--seed', type=int, default=settings.DEFAULT_SEED, help='随机种子')
    p.add_argument('--out', type=str, default=None, help='图片路径 (默认: OUTPUT_DIR/domain_<index>.png)')
    p.set_defaults(handler=cmd_plot_domain)

    return parser


async def main(argv: Optional[List[str]] = None) -> int:
    """主函数，返回退出码"""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "eval-scenarios" and not args.model and not args.oracle:
        parser.error("eval-scenarios 需要 --model 或 --oracle")

    log.info(f"启动子命令 {args.command}")
    try:
        with Timer(f"子命令 {args.command} "):
            code = args.handler(args, argv)
            if inspect.isawaitable(code):
                code = await code
    except Exception as e:
        log.error(f"错误: 子命令 {args.command} 失败 - {e}")
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_RUNTIME_ERROR
    log.info(f"子命令 {args.command} 结束，退出码 {code}")
    return code


def run() -> None:
    """控制台脚本入口"""
    sys.exit(asyncio.run(main()))


if __name__ == "__main__":
    run()
